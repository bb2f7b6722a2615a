// Vectorized shading kernels. This file is compiled with fast-math style flags
// (see src/CMakeLists.txt) so the per-light loops map onto the vector math
// library; every loop is still evaluated in a fixed order per pixel, so output
// does not depend on the OpenMP worker count.

#include "shading_kernel.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <limits>
#include <tuple>

namespace dsbrdf::detail {
namespace {

constexpr int kBlock = 16;
constexpr int kBasis = spline::kControlPoints;

struct LightSoA {
  int n = 0;
  std::vector<double> x, y, z, w, r, g, b;
};

LightSoA make_light_soa(const SceneView& view) {
  const LightTable& table = *view.lights;
  LightSoA s;
  s.n = static_cast<int>(table.size());
  for (auto* v : {&s.x, &s.y, &s.z, &s.w, &s.r, &s.g, &s.b}) v->resize(s.n);
  for (int i = 0; i < s.n; ++i) {
    s.x[i] = table.directions[i].x;
    s.y[i] = table.directions[i].y;
    s.z[i] = table.directions[i].z;
    s.w[i] = table.weights[i];
    s.r[i] = view.radiance[i][0];
    s.g[i] = view.radiance[i][1];
    s.b[i] = view.radiance[i][2];
  }
  return s;
}

// Light geometry for one viewing direction: half vectors, validity and the
// dense spline basis at each light's theta_d.
struct ViewTable {
  std::vector<double> hx, hy, hz, valid;
  std::array<std::vector<double>, kBasis> basis;

  void resize(int n) {
    for (auto* v : {&hx, &hy, &hz, &valid}) v->resize(n);
    for (auto& v : basis) v.resize(n);
  }
};

void compute_view(const Vec3& wp, const LightSoA& L, ViewTable& v) {
  v.resize(L.n);
  const double* lx = L.x.data();
  const double* ly = L.y.data();
  const double* lz = L.z.data();
  double* hx = v.hx.data();
  double* hy = v.hy.data();
  double* hz = v.hz.data();
  double* valid = v.valid.data();
  std::array<double*, kBasis> bp{};
  for (int j = 0; j < kBasis; ++j) bp[j] = v.basis[j].data();
  constexpr double kScale = spline::kSpans / spline::kThetaMax;
  constexpr double kLastSpan = spline::kSpans - 1;

#pragma omp simd
  for (int i = 0; i < L.n; ++i) {
    const double sx = lx[i] + wp.x;
    const double sy = ly[i] + wp.y;
    const double sz = lz[i] + wp.z;
    const double len = std::sqrt(sx * sx + sy * sy + sz * sz);
    const bool ok = len >= 1e-8;
    const double inv = ok ? 1.0 / len : 0.0;
    const double ux = sx * inv;
    const double uy = sy * inv;
    const double uz = sz * inv;
    hx[i] = ux;
    hy[i] = uy;
    hz[i] = uz;
    valid[i] = ok ? 1.0 : 0.0;
    const double cosd = std::min(std::max(lx[i] * ux + ly[i] * uy + lz[i] * uz, 0.0), 1.0);
    const double t = std::min(std::max(std::acos(cosd) * kScale, 0.0), static_cast<double>(spline::kSpans));
    const double span = std::min(std::floor(t), kLastSpan);
    const double xl = t - span;
    const double a0 = span == 0.0 ? 1.0 : 0.5;
    const double a2 = span == kLastSpan ? 1.0 : 0.5;
    const double w0 = a0 * (1.0 - xl) * (1.0 - xl);
    const double w2 = a2 * xl * xl;
    const double w1 = 1.0 - w0 - w2;
    for (int j = 0; j < kBasis; ++j) {
      const double jd = j;
      bp[j][i] = (span == jd ? w0 : 0.0) + (span + 1.0 == jd ? w1 : 0.0) + (span + 2.0 == jd ? w2 : 0.0);
    }
  }
}

// coef[q * n + i] = lobe coefficient curve q evaluated at light i's theta_d.
void compute_coefficients(const ViewTable& v, const MaterialParams& params, int n, std::vector<double>& coef) {
  coef.resize(static_cast<std::size_t>(kCurves) * n);
  std::array<const double*, kBasis> bp{};
  for (int j = 0; j < kBasis; ++j) bp[j] = v.basis[j].data();
  for (int q = 0; q < kCurves; ++q) {
    const double* p = params.data() + q * kBasis;
    double* out = coef.data() + static_cast<std::size_t>(q) * n;
#pragma omp simd
    for (int i = 0; i < n; ++i) {
      out[i] = bp[0][i] * p[0] + bp[1][i] * p[1] + bp[2][i] * p[2] + bp[3][i] * p[3] + bp[4][i] * p[4] +
               bp[5][i] * p[5];
    }
  }
}

// True if any light in [i0, i1) is above the surface horizon with valid geometry.
inline bool block_lit(const Vec3& n, const LightSoA& L, const ViewTable& v, int i0, int i1) {
  double best = 0.0;
#pragma omp simd reduction(max : best)
  for (int i = i0; i < i1; ++i) {
    const double c = n.x * L.x[i] + n.y * L.y[i] + n.z * L.z[i];
    best = std::max(best, v.valid[i] > 0.0 ? c : 0.0);
  }
  return best > 0.0;
}

// True when every lobe's exponent curve is identical across the color
// channels, so base^m1 can be computed once per lobe. The shared value is
// bitwise the same as the per-channel one.
bool shared_exponents(const MaterialParams& p) {
  for (int k = 1; k < kChannels; ++k) {
    for (int s = 0; s < kLobes; ++s) {
      for (int j = 0; j < kBasis; ++j) {
        if (p[param_index(k, s, 1, j)] != p[param_index(0, s, 1, j)]) return false;
      }
    }
  }
  return true;
}

// Per-light transcendental results of one pixel's forward pass, reused by its
// backward pass. Entry (k, s) of e1/pw lives at ((k * kLobes + s) * N + i).
struct LobeCache {
  std::vector<double> e1, pw, logBase;

  void resize(int n) {
    e1.resize(static_cast<std::size_t>(kChannels) * kLobes * n);
    pw.resize(static_cast<std::size_t>(kChannels) * kLobes * n);
    logBase.resize(n);
  }
};

// Radiance of one pixel; fmax receives the largest |f^k| over contributing lights.
// With kStore the lobe values are also written to `cache`.
template <bool kSharedExp, bool kStore = false>
void shade(const Vec3& n, const LightSoA& L, const ViewTable& v, const double* coef, Rgb& out, double& fmax,
           LobeCache* cache = nullptr) {
  const int N = L.n;
  const double* lx = L.x.data();
  const double* ly = L.y.data();
  const double* lz = L.z.data();
  const double* lw = L.w.data();
  const double* lr = L.r.data();
  const double* lg = L.g.data();
  const double* lb_ = L.b.data();
  const double* hx = v.hx.data();
  const double* hy = v.hy.data();
  const double* hz = v.hz.data();
  const double* valid = v.valid.data();

  double* ce1 = kStore ? cache->e1.data() : nullptr;
  double* cpw = kStore ? cache->pw.data() : nullptr;
  double* clog = kStore ? cache->logBase.data() : nullptr;

  double a0 = 0.0, a1 = 0.0, a2 = 0.0, fm = 0.0;
  for (int i0 = 0; i0 < N; i0 += kBlock) {
    const int i1 = std::min(i0 + kBlock, N);
    if (!block_lit(n, L, v, i0, i1)) continue;
#pragma omp simd reduction(+ : a0, a1, a2) reduction(max : fm)
    for (int i = i0; i < i1; ++i) {
      const double c = n.x * lx[i] + n.y * ly[i] + n.z * lz[i];
      const double hd = n.x * hx[i] + n.y * hy[i] + n.z * hz[i];
      const double base = std::min(std::max(hd, kBaseEpsilon), 1.0);
      const double logBase = std::log(base);
      double f0 = 0.0, f1 = 0.0, f2 = 0.0;
#pragma GCC unroll 3
      for (int s = 0; s < kLobes; ++s) {
        const double p0 = std::exp(coef[curve_index(0, s, 1) * N + i] * logBase);
        const double p1 = kSharedExp ? p0 : std::exp(coef[curve_index(1, s, 1) * N + i] * logBase);
        const double p2 = kSharedExp ? p0 : std::exp(coef[curve_index(2, s, 1) * N + i] * logBase);
        const double e0 = std::expm1(coef[curve_index(0, s, 0) * N + i] * p0);
        const double e1 = std::expm1(coef[curve_index(1, s, 0) * N + i] * p1);
        const double e2 = std::expm1(coef[curve_index(2, s, 0) * N + i] * p2);
        f0 += e0;
        f1 += e1;
        f2 += e2;
        if constexpr (kStore) {
          ce1[(0 * kLobes + s) * N + i] = e0;
          ce1[(1 * kLobes + s) * N + i] = e1;
          ce1[(2 * kLobes + s) * N + i] = e2;
          cpw[(0 * kLobes + s) * N + i] = p0;
          cpw[(1 * kLobes + s) * N + i] = p1;
          cpw[(2 * kLobes + s) * N + i] = p2;
        }
      }
      if constexpr (kStore) clog[i] = logBase;
      // Zero weight for back-facing or degenerate lights.
      const double g = (c > 0.0 ? c * lw[i] : 0.0) * valid[i];
      a0 += f0 * lr[i] * g;
      a1 += f1 * lg[i] * g;
      a2 += f2 * lb_[i] * g;
      const double mag = std::max(std::max(std::abs(f0), std::abs(f1)), std::abs(f2));
      fm = std::max(fm, g > 0.0 ? mag : 0.0);
    }
  }
  out = {a0, a1, a2};
  fmax = fm;
}

// Accumulates the backward contributions of one pixel.
//   env:   dEnv[k * N + i] += u_k f^k max(0, n.w_i) dw_i
//   dn:    returned normal gradient
//   dcoef: dcoef[q * N + i] += dI/dm_q for curve q at light i (before the spline chain rule)
// With kCached the exp/expm1/log values come from the pixel's forward pass.
template <bool kEnv, bool kNormal, bool kMaterial, bool kSharedExp, bool kCached>
void shade_backward(const Vec3& n, const Rgb& u, const LightSoA& L, const ViewTable& v, const double* coef, double* env,
                    double* dcoef, Vec3& dn, const LobeCache* cache) {
  const int N = L.n;
  const double* lx = L.x.data();
  const double* ly = L.y.data();
  const double* lz = L.z.data();
  const double* lw = L.w.data();
  const double* lr = L.r.data();
  const double* lg = L.g.data();
  const double* lb_ = L.b.data();
  const double* hx = v.hx.data();
  const double* hy = v.hy.data();
  const double* hz = v.hz.data();
  const double* valid = v.valid.data();
  const double u0 = u[0], u1 = u[1], u2 = u[2];

  double dnx = 0.0, dny = 0.0, dnz = 0.0;
  alignas(64) double tx[kBlock], ty[kBlock], tz[kBlock];
  for (int i0 = 0; i0 < N; i0 += kBlock) {
    const int i1 = std::min(i0 + kBlock, N);
    if (!block_lit(n, L, v, i0, i1)) continue;
#pragma omp simd
    for (int i = i0; i < i1; ++i) {
      const double c = n.x * lx[i] + n.y * ly[i] + n.z * lz[i];
      const double hd = n.x * hx[i] + n.y * hy[i] + n.z * hz[i];
      const double base = std::min(std::max(hd, kBaseEpsilon), 1.0);
      double logBase;
      if constexpr (kCached) {
        logBase = cache->logBase[i];
      } else {
        logBase = std::log(base);
      }
      const double invBase = 1.0 / base;
      // Zero for back-facing or degenerate lights.
      const double wa = (c > 0.0 ? lw[i] : 0.0) * valid[i];
      const double g = c * wa;
      const double ul0 = u0 * lr[i];
      const double ul1 = u1 * lg[i];
      const double ul2 = u2 * lb_[i];
      // g restricted to the unclamped range of the base
      const double gs = (hd > kBaseEpsilon && hd < 1.0) ? g : 0.0;

      // Per channel: f and df/dbase; material terms go to dcoef.
      double f0 = 0.0, f1 = 0.0, f2 = 0.0, d0 = 0.0, d1 = 0.0, d2 = 0.0;
      auto lobe = [&](int k, int s, double m1, double pw, double ulk, double& fs, double& ds)
                      __attribute__((always_inline)) {
        const int q0 = curve_index(k, s, 0) * N + i;
        const double m0 = coef[q0];
        double e1;
        if constexpr (kCached) {
          e1 = cache->e1[(k * kLobes + s) * N + i];
        } else {
          e1 = std::expm1(m0 * pw);
        }
        const double e = e1 + 1.0;
        fs += e1;
        if constexpr (kNormal) ds += e * m0 * m1 * pw * invBase;
        if constexpr (kMaterial) {
          const double scale = ulk * g;
          dcoef[q0] += scale * e * pw;
          dcoef[curve_index(k, s, 1) * N + i] += scale * e * m0 * pw * logBase;
        }
      };
#pragma GCC unroll 3
      for (int s = 0; s < kLobes; ++s) {
        const double m10 = coef[curve_index(0, s, 1) * N + i];
        const double m11 = kSharedExp ? m10 : coef[curve_index(1, s, 1) * N + i];
        const double m12 = kSharedExp ? m10 : coef[curve_index(2, s, 1) * N + i];
        double p0, p1, p2;
        if constexpr (kCached) {
          p0 = cache->pw[(0 * kLobes + s) * N + i];
          p1 = cache->pw[(1 * kLobes + s) * N + i];
          p2 = cache->pw[(2 * kLobes + s) * N + i];
        } else {
          p0 = std::exp(m10 * logBase);
          p1 = kSharedExp ? p0 : std::exp(m11 * logBase);
          p2 = kSharedExp ? p0 : std::exp(m12 * logBase);
        }
        lobe(0, s, m10, p0, ul0, f0, d0);
        lobe(1, s, m11, p1, ul1, f1, d1);
        lobe(2, s, m12, p2, ul2, f2, d2);
      }
      if constexpr (kEnv) {
        env[i] += u0 * f0 * g;
        env[N + i] += u1 * f1 * g;
        env[2 * N + i] += u2 * f2 * g;
      }
      if constexpr (kNormal) {
        const double a = (ul0 * f0 + ul1 * f1 + ul2 * f2) * wa;
        const double bterm = (ul0 * d0 + ul1 * d1 + ul2 * d2) * gs;
        tx[i - i0] = a * lx[i] + bterm * hx[i];
        ty[i - i0] = a * ly[i] + bterm * hy[i];
        tz[i - i0] = a * lz[i] + bterm * hz[i];
      }
    }
    if constexpr (kNormal) {
      for (int j = 0; j < i1 - i0; ++j) {
        dnx += tx[j];
        dny += ty[j];
        dnz += tz[j];
      }
    }
  }
  dn = {dnx, dny, dnz};
}

using BackwardFn = void (*)(const Vec3&, const Rgb&, const LightSoA&, const ViewTable&, const double*, double*, double*,
                            Vec3&, const LobeCache*);

template <bool kSharedExp, bool kCached>
BackwardFn select_backward(GradientGroups g) {
  static constexpr BackwardFn table[8] = {
      &shade_backward<false, false, false, kSharedExp, kCached>, &shade_backward<false, false, true, kSharedExp, kCached>,
      &shade_backward<false, true, false, kSharedExp, kCached>,  &shade_backward<false, true, true, kSharedExp, kCached>,
      &shade_backward<true, false, false, kSharedExp, kCached>,  &shade_backward<true, false, true, kSharedExp, kCached>,
      &shade_backward<true, true, false, kSharedExp, kCached>,   &shade_backward<true, true, true, kSharedExp, kCached>,
  };
  return table[(g.light ? 4 : 0) | (g.normal ? 2 : 0) | (g.material ? 1 : 0)];
}

// acc[q * 6 + j] += sum_i dcoef[q * N + i] * basis_j(i)
void contract_basis(const double* dcoef, const ViewTable& v, int N, double* acc) {
  for (int q = 0; q < kCurves; ++q) {
    const double* d = dcoef + static_cast<std::size_t>(q) * N;
    for (int j = 0; j < kBasis; ++j) {
      const double* b = v.basis[j].data();
      double sum = 0.0;
#pragma omp simd reduction(+ : sum)
      for (int i = 0; i < N; ++i) sum += d[i] * b[i];
      acc[q * kBasis + j] += sum;
    }
  }
}

// Geometry and coefficient tables shared by all pixels when the view direction
// is constant (orthographic camera).
struct SharedTables {
  bool constantView = false;
  ViewTable view;
  std::vector<std::vector<double>> coef;  // per region
};

SharedTables make_shared_tables(const SceneView& sv, const LightSoA& L) {
  SharedTables t;
  t.constantView = sv.camera->mode() == CameraMode::kOrthographic;
  if (!t.constantView) return t;
  compute_view(sv.camera->view_direction(0, 0), L, t.view);
  t.coef.resize(sv.materials.size());
  for (std::size_t r = 0; r < sv.materials.size(); ++r) compute_coefficients(t.view, sv.materials[r], L.n, t.coef[r]);
  return t;
}

struct Workspace {
  ViewTable view;
  std::vector<double> coef;
};

// Returns the view table and coefficient table to use for pixel p.
std::pair<const ViewTable*, const double*> tables_for(const SceneView& sv, const LightSoA& L, const SharedTables& shared,
                                                      Workspace& ws, std::size_t p) {
  const int r = sv.region(p);
  if (shared.constantView) return {&shared.view, shared.coef[r].data()};
  const int px = static_cast<int>(p % sv.width);
  const int py = static_cast<int>(p / sv.width);
  compute_view(sv.camera->view_direction(px, py), L, ws.view);
  compute_coefficients(ws.view, sv.materials[r], L.n, ws.coef);
  return {&ws.view, ws.coef.data()};
}

using ShadeFn = void (*)(const Vec3&, const LightSoA&, const ViewTable&, const double*, Rgb&, double&, LobeCache*);

template <bool kStore>
std::vector<ShadeFn> select_shade(const SceneView& sv) {
  std::vector<ShadeFn> fns;
  for (const MaterialParams& m : sv.materials) {
    fns.push_back(shared_exponents(m) ? &shade<true, kStore> : &shade<false, kStore>);
  }
  return fns;
}

}  // namespace

std::ptrdiff_t render_kernel(const SceneView& sv, std::span<Rgb> out) {
  const LightSoA L = make_light_soa(sv);
  const SharedTables shared = make_shared_tables(sv, L);
  const std::vector<ShadeFn> shadeFns = select_shade<false>(sv);
  const auto P = static_cast<std::ptrdiff_t>(sv.pixel_count());
  std::ptrdiff_t firstBad = std::numeric_limits<std::ptrdiff_t>::max();

#pragma omp parallel
  {
    Workspace ws;
#pragma omp for schedule(dynamic, 8) reduction(min : firstBad)
    for (std::ptrdiff_t p = 0; p < P; ++p) {
      out[p] = Rgb{};
      if (!sv.mask[p]) continue;
      const auto [vt, coef] = tables_for(sv, L, shared, ws, static_cast<std::size_t>(p));
      double fmax = 0.0;
      shadeFns[sv.region(static_cast<std::size_t>(p))](sv.normals[p], L, *vt, coef, out[p], fmax, nullptr);
      if (fmax > kOverflowLimit) firstBad = std::min(firstBad, p);
    }
  }
  return firstBad == std::numeric_limits<std::ptrdiff_t>::max() ? -1 : firstBad;
}

std::ptrdiff_t render_pixels_kernel(const SceneView& sv, std::span<const std::size_t> pixels, std::span<Rgb> out) {
  const LightSoA L = make_light_soa(sv);
  const SharedTables shared = make_shared_tables(sv, L);
  const std::vector<ShadeFn> shadeFns = select_shade<false>(sv);
  Workspace ws;
  std::ptrdiff_t firstBad = -1;
  for (std::size_t j = 0; j < pixels.size(); ++j) {
    const std::size_t p = pixels[j];
    out[j] = Rgb{};
    if (!sv.mask[p]) continue;
    const auto [vt, coef] = tables_for(sv, L, shared, ws, p);
    double fmax = 0.0;
    shadeFns[sv.region(p)](sv.normals[p], L, *vt, coef, out[j], fmax, nullptr);
    if (fmax > kOverflowLimit && firstBad < 0) firstBad = static_cast<std::ptrdiff_t>(p);
  }
  return firstBad;
}

namespace {

// Shared driver. Without a target the given upstream is used. With one, each
// pixel is rendered first (into `image`), its upstream is 2 (render - target)
// and the backward pass reuses the cached lobe values.
std::ptrdiff_t backward_impl(const SceneView& sv, std::span<const Rgb> upstream, std::span<const Rgb> target,
                             GradientGroups groups, SceneGradients& out, std::span<Rgb> image) {
  const bool fused = !target.empty();
  const LightSoA L = make_light_soa(sv);
  const SharedTables shared = make_shared_tables(sv, L);
  const int N = L.n;
  const int R = sv.region_count();
  const std::size_t P = sv.pixel_count();

  out.dNormal.assign(groups.normal ? P : 0, Vec3{});
  out.dEnv.assign(groups.light ? static_cast<std::size_t>(N) : 0, Rgb{});
  out.dMaterial.assign(groups.material ? static_cast<std::size_t>(R) : 0, MaterialParams{});
  const bool anyGroup = groups.normal || groups.light || groups.material;
  if (!anyGroup && !fused) return -1;

  std::vector<BackwardFn> fns;
  for (const MaterialParams& m : sv.materials) {
    if (fused) {
      fns.push_back(select_backward<false, true>(groups));
    } else {
      fns.push_back(shared_exponents(m) ? select_backward<true, false>(groups) : select_backward<false, false>(groups));
    }
  }
  const std::vector<ShadeFn> shadeFns = select_shade<true>(sv);
  std::ptrdiff_t firstBad = std::numeric_limits<std::ptrdiff_t>::max();
  // Fixed row partition: the reduction order depends on the image height only.
  const int chunks = std::min(sv.height, 64);
  std::vector<std::vector<double>> envChunk(chunks);
  std::vector<std::vector<double>> matChunk(chunks);

#pragma omp parallel
  {
    Workspace ws;
    LobeCache cache;
    if (fused) cache.resize(N);
    std::vector<double> dcoef;
#pragma omp for schedule(dynamic, 1) reduction(min : firstBad)
    for (int c = 0; c < chunks; ++c) {
      const int row0 = static_cast<int>(static_cast<long long>(c) * sv.height / chunks);
      const int row1 = static_cast<int>(static_cast<long long>(c + 1) * sv.height / chunks);
      std::vector<double>& env = envChunk[c];
      std::vector<double>& mat = matChunk[c];
      if (groups.light) env.assign(static_cast<std::size_t>(3) * N, 0.0);
      if (groups.material) {
        mat.assign(static_cast<std::size_t>(R) * kMaterialParams, 0.0);
        dcoef.assign(static_cast<std::size_t>(shared.constantView ? R : 1) * kCurves * N, 0.0);
      }
      for (int y = row0; y < row1; ++y) {
        for (int x = 0; x < sv.width; ++x) {
          const std::size_t p = static_cast<std::size_t>(y) * sv.width + x;
          if (fused) image[p] = Rgb{};
          if (!sv.mask[p]) continue;
          const int r = sv.region(p);
          Rgb u;
          const ViewTable* vt = nullptr;
          const double* coef = nullptr;
          if (fused) {
            std::tie(vt, coef) = tables_for(sv, L, shared, ws, p);
            double fmax = 0.0;
            shadeFns[r](sv.normals[p], L, *vt, coef, image[p], fmax, &cache);
            if (fmax > kOverflowLimit) firstBad = std::min(firstBad, static_cast<std::ptrdiff_t>(p));
            for (int k = 0; k < kChannels; ++k) u[k] = 2.0 * (image[p][k] - target[p][k]);
            if (!anyGroup) continue;
          } else {
            u = upstream[p];
          }
          if (u[0] == 0.0 && u[1] == 0.0 && u[2] == 0.0) continue;
          if (!fused) std::tie(vt, coef) = tables_for(sv, L, shared, ws, p);
          double* dc = nullptr;
          if (groups.material) {
            if (shared.constantView) {
              dc = dcoef.data() + static_cast<std::size_t>(r) * kCurves * N;
            } else {
              std::fill(dcoef.begin(), dcoef.end(), 0.0);
              dc = dcoef.data();
            }
          }
          Vec3 dn;
          fns[r](sv.normals[p], u, L, *vt, coef, groups.light ? env.data() : nullptr, dc, dn, &cache);
          if (groups.normal) out.dNormal[p] = dn;
          if (groups.material && !shared.constantView) contract_basis(dc, *vt, N, mat.data() + r * kMaterialParams);
        }
      }
      if (groups.material && shared.constantView) {
        for (int r = 0; r < R; ++r) {
          contract_basis(dcoef.data() + static_cast<std::size_t>(r) * kCurves * N, shared.view, N,
                         mat.data() + r * kMaterialParams);
        }
      }
    }
  }

  for (int c = 0; c < chunks; ++c) {
    if (groups.light) {
      const std::vector<double>& env = envChunk[c];
      for (int i = 0; i < N; ++i) {
        for (int k = 0; k < kChannels; ++k) out.dEnv[i][k] += env[static_cast<std::size_t>(k) * N + i];
      }
    }
    if (groups.material) {
      for (int r = 0; r < R; ++r) {
        for (int j = 0; j < kMaterialParams; ++j) out.dMaterial[r][j] += matChunk[c][r * kMaterialParams + j];
      }
    }
  }
  return firstBad == std::numeric_limits<std::ptrdiff_t>::max() ? -1 : firstBad;
}

}  // namespace

void backward_kernel(const SceneView& sv, std::span<const Rgb> upstream, GradientGroups groups, SceneGradients& out) {
  backward_impl(sv, upstream, {}, groups, out, {});
}

std::ptrdiff_t residual_kernel(const SceneView& sv, std::span<const Rgb> target, GradientGroups groups,
                               SceneGradients& out, std::span<Rgb> image) {
  return backward_impl(sv, {}, target, groups, out, image);
}

}  // namespace dsbrdf::detail
