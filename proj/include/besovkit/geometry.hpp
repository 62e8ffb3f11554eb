#pragma once

#include <array>
#include <cmath>
#include <complex>
#include <cstdint>
#include <functional>
#include <optional>
#include <stdexcept>
#include <string>
#include <variant>
#include <vector>

#include "besovkit/quadrature.hpp"

namespace besovkit {

using Complex = std::complex<double>;

/// Point in R^m, m <= 3. Unused slots are zero.
struct Vec3 {
    std::array<double, 3> v{0.0, 0.0, 0.0};

    double& operator[](int i) { return v[i]; }
    double operator[](int i) const { return v[i]; }
};

inline Vec3 operator-(const Vec3& a, const Vec3& b)
{
    return Vec3{{a[0] - b[0], a[1] - b[1], a[2] - b[2]}};
}

inline double norm2(const Vec3& a)
{
    return std::sqrt(a[0] * a[0] + a[1] * a[1] + a[2] * a[2]);
}

inline double dist_euclid(const Vec3& a, const Vec3& b) { return norm2(a - b); }

/// kappa(x) = A x + b with A of shape m x d.
struct AffineMap {
    int d = 1;
    int m = 1;
    std::array<std::array<double, 3>, 3> A{}; // A[row][col]
    Vec3 b;

    Vec3 eval(const std::array<double, 3>& x) const
    {
        Vec3 y = b;
        for (int r = 0; r < m; ++r)
            for (int c = 0; c < d; ++c) y[r] += A[r][c] * x[c];
        return y;
    }
};

/// Tensor-product Bezier patch: coefficients on a (deg+1)^d control grid.
struct BezierMap {
    int d = 2;
    int m = 3;
    std::array<int, 3> degree{1, 1, 1};
    std::vector<Vec3> ctrl; // row-major over (degree[0]+1) x ... x (degree[d-1]+1)

    static void bernstein(int n, double t, std::vector<double>& out)
    {
        out.assign(n + 1, 0.0);
        out[0] = 1.0;
        for (int j = 1; j <= n; ++j) {
            double saved = 0.0;
            for (int k = 0; k < j; ++k) {
                const double tmp = out[k];
                out[k] = saved + (1.0 - t) * tmp;
                saved = t * tmp;
            }
            out[j] = saved;
        }
    }

    Vec3 eval(const std::array<double, 3>& x) const
    {
        std::array<std::vector<double>, 3> basis;
        for (int ax = 0; ax < d; ++ax) bernstein(degree[ax], x[ax], basis[ax]);
        Vec3 y;
        const int n0 = degree[0] + 1;
        const int n1 = d > 1 ? degree[1] + 1 : 1;
        const int n2 = d > 2 ? degree[2] + 1 : 1;
        for (int i = 0; i < n0; ++i)
            for (int j = 0; j < n1; ++j)
                for (int k = 0; k < n2; ++k) {
                    const double w =
                        basis[0][i] * (d > 1 ? basis[1][j] : 1.0) * (d > 2 ? basis[2][k] : 1.0);
                    const Vec3& c = ctrl[static_cast<std::size_t>((i * n1 + j) * n2 + k)];
                    for (int r = 0; r < m; ++r) y[r] += w * c[r];
                }
        return y;
    }
};

/// One smooth parametric patch kappa : [0,1]^d -> R^m.
struct Patch {
    int id = 0;
    int d = 1;
    int m = 1;
    std::variant<AffineMap, BezierMap> map;

    Vec3 eval(const std::array<double, 3>& x) const
    {
        return std::visit([&](const auto& f) { return f.eval(x); }, map);
    }

    /// Least-squares inverse for affine patches; nullopt if the point is not
    /// on the patch (residual or box check fails).
    std::optional<std::array<double, 3>> invert(const Vec3& y, double tol = 1e-9) const
    {
        const AffineMap* aff = std::get_if<AffineMap>(&map);
        if (!aff) return std::nullopt;
        // Solve (A^T A) x = A^T (y - b), d x d with d <= 3.
        double ata[3][3] = {};
        double rhs[3] = {};
        for (int r = 0; r < m; ++r) {
            const double res = y[r] - aff->b[r];
            for (int c = 0; c < d; ++c) {
                rhs[c] += aff->A[r][c] * res;
                for (int c2 = 0; c2 < d; ++c2) ata[c][c2] += aff->A[r][c] * aff->A[r][c2];
            }
        }
        std::array<double, 3> x{0.0, 0.0, 0.0};
        if (d == 1) {
            if (ata[0][0] == 0.0) return std::nullopt;
            x[0] = rhs[0] / ata[0][0];
        } else if (d == 2) {
            const double det = ata[0][0] * ata[1][1] - ata[0][1] * ata[1][0];
            if (std::abs(det) < 1e-300) return std::nullopt;
            x[0] = (rhs[0] * ata[1][1] - rhs[1] * ata[0][1]) / det;
            x[1] = (ata[0][0] * rhs[1] - ata[1][0] * rhs[0]) / det;
        } else {
            return std::nullopt;
        }
        for (int c = 0; c < d; ++c)
            if (x[c] < -tol || x[c] > 1.0 + tol) return std::nullopt;
        if (dist_euclid(eval(x), y) > tol) return std::nullopt;
        return x;
    }
};

/// Signed coordinate permutation of the unit cube:
/// g(x)_i = flip[i] ? 1 - x[perm[i]] : x[perm[i]].
/// The conformity condition kappa_j (g(x)) = kappa_i(x) on the shared face
/// needs reflections for some closed surfaces (the cube admits no purely
/// permutation-matched conforming parametrization).
struct SignedPerm {
    std::array<int, 3> perm{0, 1, 2};
    std::array<bool, 3> flip{false, false, false};

    std::array<double, 3> apply(const std::array<double, 3>& x) const
    {
        std::array<double, 3> y{0.0, 0.0, 0.0};
        for (int i = 0; i < 3; ++i) y[i] = flip[i] ? 1.0 - x[perm[i]] : x[perm[i]];
        return y;
    }

    bool is_pure_permutation() const { return !flip[0] && !flip[1] && !flip[2]; }
};

/// Face index encoding: face f fixes axis f/2 at value f%2.
inline int face_axis(int face) { return face / 2; }
inline int face_value(int face) { return face % 2; }

struct Interface {
    int patch_i = 0;
    int patch_j = 0;
    int face_i = 0;
    int face_j = 0;
    SignedPerm perm;
};

struct Decomposition {
    int d = 1;
    int m = 1;
    std::string name;
    std::vector<Patch> patches;
    std::vector<Interface> interfaces;

    std::size_t n_patches() const { return patches.size(); }
};

/// Function given patchwise in local coordinates of each patch.
class PatchFunction {
public:
    using LocalFn = std::function<Complex(int patch, const std::array<double, 3>& x)>;

    PatchFunction() = default;
    explicit PatchFunction(LocalFn fn) : fn_(std::move(fn)) {}

    static PatchFunction from_local(LocalFn fn) { return PatchFunction(std::move(fn)); }

    /// Composition with the patch maps: f stays a function of the ambient point.
    static PatchFunction from_ambient(const Decomposition& dec,
                                      std::function<Complex(const Vec3&)> f)
    {
        auto patches = dec.patches; // capture by value; decompositions are small
        return PatchFunction([patches, f = std::move(f)](int p, const std::array<double, 3>& x) {
            return f(patches[static_cast<std::size_t>(p)].eval(x));
        });
    }

    Complex operator()(int patch, const std::array<double, 3>& x) const { return fn_(patch, x); }

    bool valid() const { return static_cast<bool>(fn_); }

private:
    LocalFn fn_;
};

inline PatchFunction pullback(const Decomposition& dec, std::function<Complex(const Vec3&)> f)
{
    return PatchFunction::from_ambient(dec, std::move(f));
}

/// Composition with kappa^{-1}: a function of the ambient point from a
/// function in the local coordinates of one patch (affine patches).
inline std::function<Complex(const Vec3&)> pushforward(
    const Patch& patch, std::function<Complex(const std::array<double, 3>&)> local_fn)
{
    return [patch, local_fn = std::move(local_fn)](const Vec3& y) {
        const auto local = patch.invert(y);
        if (!local) throw std::invalid_argument("pushforward: point is not on the patch");
        return local_fn(*local);
    };
}

struct InterfaceReport {
    int patch_i = 0;
    int patch_j = 0;
    double max_deviation = 0.0;
    bool ok = false;
};

struct ConformityReport {
    std::vector<InterfaceReport> interfaces;
    bool overlap_found = false;
    Vec3 overlap_witness;
    bool ok = false;
};

namespace detail {

/// Lattice of `n` points spanning a face of [0,1]^d (interior-inclusive).
inline std::vector<std::array<double, 3>> face_samples(int d, int face, int n)
{
    std::vector<std::array<double, 3>> pts;
    const int axis = face_axis(face);
    const double val = static_cast<double>(face_value(face));
    if (d == 1) {
        std::array<double, 3> x{0.0, 0.0, 0.0};
        x[0] = val;
        pts.push_back(x);
        return pts;
    }
    if (d == 2) {
        const int other = 1 - axis;
        for (int k = 0; k < n; ++k) {
            std::array<double, 3> x{0.0, 0.0, 0.0};
            x[axis] = val;
            x[other] = (n == 1) ? 0.5 : static_cast<double>(k) / (n - 1);
            pts.push_back(x);
        }
        return pts;
    }
    // d == 3: sample the 2-face with an n x n grid.
    int o1 = -1, o2 = -1;
    for (int a = 0; a < 3; ++a)
        if (a != axis) (o1 < 0 ? o1 : o2) = a;
    for (int k1 = 0; k1 < n; ++k1)
        for (int k2 = 0; k2 < n; ++k2) {
            std::array<double, 3> x{0.0, 0.0, 0.0};
            x[axis] = val;
            x[o1] = (n == 1) ? 0.5 : static_cast<double>(k1) / (n - 1);
            x[o2] = (n == 1) ? 0.5 : static_cast<double>(k2) / (n - 1);
            pts.push_back(x);
        }
    return pts;
}

inline std::vector<SignedPerm> all_signed_perms(int d)
{
    std::vector<std::array<int, 3>> perms;
    if (d == 1) {
        perms.push_back({0, 1, 2});
    } else if (d == 2) {
        perms.push_back({0, 1, 2});
        perms.push_back({1, 0, 2});
    } else {
        const int base[6][3] = {{0, 1, 2}, {0, 2, 1}, {1, 0, 2}, {1, 2, 0}, {2, 0, 1}, {2, 1, 0}};
        for (auto& p : base) perms.push_back({p[0], p[1], p[2]});
    }
    std::vector<SignedPerm> out;
    const int nflip = 1 << d;
    for (const auto& p : perms)
        for (int mask = 0; mask < nflip; ++mask) {
            SignedPerm g;
            g.perm = p;
            for (int i = 0; i < d; ++i) g.flip[static_cast<std::size_t>(i)] = (mask >> i) & 1;
            out.push_back(g);
        }
    return out;
}

} // namespace detail

/// Detect shared full faces between all patch pairs and derive the signed
/// permutation matching them. Exact for affine patches.
inline void derive_interfaces(Decomposition& dec, double tol = 1e-12)
{
    dec.interfaces.clear();
    if (dec.d < 1 || dec.patches.empty()) return;
    const int nfaces = 2 * dec.d;
    const auto perms = detail::all_signed_perms(dec.d);
    const int ns = dec.d >= 3 ? 3 : 5;

    for (std::size_t a = 0; a < dec.patches.size(); ++a) {
        for (std::size_t b = a + 1; b < dec.patches.size(); ++b) {
            for (int fa = 0; fa < nfaces; ++fa) {
                const auto samples = detail::face_samples(dec.d, fa, ns);
                bool matched = false;
                for (int fb = 0; fb < nfaces && !matched; ++fb) {
                    for (const auto& g : perms) {
                        // g must carry face fa onto face fb.
                        bool onto = true;
                        for (const auto& x : samples) {
                            const auto y = g.apply(x);
                            if (std::abs(y[face_axis(fb)] - face_value(fb)) > tol) {
                                onto = false;
                                break;
                            }
                        }
                        if (!onto) continue;
                        double dev = 0.0;
                        for (const auto& x : samples) {
                            const Vec3 pa = dec.patches[a].eval(x);
                            const Vec3 pb = dec.patches[b].eval(g.apply(x));
                            dev = std::max(dev, dist_euclid(pa, pb));
                        }
                        if (dev <= tol) {
                            dec.interfaces.push_back(
                                {static_cast<int>(a), static_cast<int>(b), fa, fb, g});
                            matched = true;
                            break;
                        }
                    }
                }
            }
        }
    }
}

/// Checks kappa_j (pi_ij (x)) = kappa_i(x) on sampled points of every declared
/// interface, and scans for undeclared interior overlaps (affine patches).
inline ConformityReport conformity_check(const Decomposition& dec, int samples_per_face = 64,
                                         double tol = 1e-9)
{
    ConformityReport report;
    report.ok = true;

    for (const auto& itf : dec.interfaces) {
        InterfaceReport ir;
        ir.patch_i = itf.patch_i;
        ir.patch_j = itf.patch_j;
        const int ns = dec.d >= 3 ? 8 : samples_per_face;
        const auto samples = detail::face_samples(dec.d, itf.face_i, ns);
        for (const auto& x : samples) {
            const Vec3 pa = dec.patches[static_cast<std::size_t>(itf.patch_i)].eval(x);
            const Vec3 pb =
                dec.patches[static_cast<std::size_t>(itf.patch_j)].eval(itf.perm.apply(x));
            ir.max_deviation = std::max(ir.max_deviation, dist_euclid(pa, pb));
        }
        ir.ok = ir.max_deviation <= tol;
        if (!ir.ok) report.ok = false;
        report.interfaces.push_back(ir);
    }

    // Interior-overlap scan: sample strict interiors and test membership in
    // other patches. Affine-only; pairs with a declared interface may touch at
    // the boundary, interiors must still be disjoint.
    const int g = dec.d == 1 ? 9 : (dec.d == 2 ? 7 : 4);
    for (std::size_t a = 0; a < dec.patches.size() && !report.overlap_found; ++a) {
        std::vector<std::array<double, 3>> pts;
        if (dec.d == 1) {
            for (int i = 1; i < g - 1; ++i)
                pts.push_back({(i + 0.5) / g, 0.0, 0.0});
        } else if (dec.d == 2) {
            for (int i = 0; i < g; ++i)
                for (int j = 0; j < g; ++j)
                    pts.push_back({(i + 0.5) / g, (j + 0.5) / g, 0.0});
        } else {
            for (int i = 0; i < g; ++i)
                for (int j = 0; j < g; ++j)
                    for (int k = 0; k < g; ++k)
                        pts.push_back({(i + 0.5) / g, (j + 0.5) / g, (k + 0.5) / g});
        }
        for (std::size_t b = 0; b < dec.patches.size(); ++b) {
            if (a == b) continue;
            for (const auto& x : pts) {
                const Vec3 y = dec.patches[a].eval(x);
                const auto local = dec.patches[b].invert(y, 1e-9);
                if (local) {
                    const auto& xl = *local;
                    bool interior = true;
                    for (int c = 0; c < dec.d; ++c)
                        if (xl[c] < 1e-6 || xl[c] > 1.0 - 1e-6) interior = false;
                    if (interior) {
                        report.overlap_found = true;
                        report.overlap_witness = y;
                        report.ok = false;
                        break;
                    }
                }
            }
            if (report.overlap_found) break;
        }
    }
    return report;
}

/// Patchwise inner product <f,g> = sum_i <f o kappa_i, conj(g o kappa_i)>
/// over [0,1]^d with tensor Gauss-Legendre of the given order.
/// No surface-measure Jacobian enters.
inline Complex inner_product(const PatchFunction& f, const PatchFunction& g,
                             const Decomposition& dec, int quad_order = 12)
{
    const QuadratureRule rule = gauss_legendre(quad_order);
    Complex total = 0.0;
    for (std::size_t p = 0; p < dec.patches.size(); ++p) {
        const int pid = static_cast<int>(p);
        if (dec.d == 1) {
            for (std::size_t i = 0; i < rule.size(); ++i) {
                const std::array<double, 3> x{rule.nodes[i], 0.0, 0.0};
                total += rule.weights[i] * f(pid, x) * std::conj(g(pid, x));
            }
        } else if (dec.d == 2) {
            for (std::size_t i = 0; i < rule.size(); ++i)
                for (std::size_t j = 0; j < rule.size(); ++j) {
                    const std::array<double, 3> x{rule.nodes[i], rule.nodes[j], 0.0};
                    total += rule.weights[i] * rule.weights[j] * f(pid, x) * std::conj(g(pid, x));
                }
        } else {
            for (std::size_t i = 0; i < rule.size(); ++i)
                for (std::size_t j = 0; j < rule.size(); ++j)
                    for (std::size_t k = 0; k < rule.size(); ++k) {
                        const std::array<double, 3> x{rule.nodes[i], rule.nodes[j], rule.nodes[k]};
                        total += rule.weights[i] * rule.weights[j] * rule.weights[k] * f(pid, x) *
                                 std::conj(g(pid, x));
                    }
        }
    }
    return total;
}

namespace detail {

inline Patch affine_patch(int id, int d, int m, std::array<std::array<double, 3>, 3> A, Vec3 b)
{
    Patch p;
    p.id = id;
    p.d = d;
    p.m = m;
    AffineMap map;
    map.d = d;
    map.m = m;
    map.A = A;
    map.b = b;
    p.map = map;
    return p;
}

/// Unit square patch in a coordinate plane: kappa(u,v) = origin + u*e1 + v*e2.
inline Patch square_patch(int id, int m, Vec3 origin, Vec3 e1, Vec3 e2)
{
    std::array<std::array<double, 3>, 3> A{};
    for (int r = 0; r < m; ++r) {
        A[r][0] = e1[r];
        A[r][1] = e2[r];
    }
    return affine_patch(id, 2, m, A, origin);
}

} // namespace detail

/// Catalog of built-in decomposable manifolds.
inline Decomposition builtin_manifold(const std::string& name)
{
    Decomposition dec;
    dec.name = name;
    if (name == "interval") {
        dec.d = 1;
        dec.m = 1;
        std::array<std::array<double, 3>, 3> A{};
        A[0][0] = 1.0;
        dec.patches.push_back(detail::affine_patch(0, 1, 1, A, Vec3{}));
        return dec;
    }
    if (name == "square2") {
        // [0,2] x [0,1] as two unit squares; the second is reversed in u so the
        // shared edge x=1 matches with the identity permutation.
        dec.d = 2;
        dec.m = 2;
        dec.patches.push_back(
            detail::square_patch(0, 2, Vec3{{0, 0, 0}}, Vec3{{1, 0, 0}}, Vec3{{0, 1, 0}}));
        dec.patches.push_back(
            detail::square_patch(1, 2, Vec3{{2, 0, 0}}, Vec3{{-1, 0, 0}}, Vec3{{0, 1, 0}}));
        derive_interfaces(dec);
        return dec;
    }
    if (name == "cube-surface") {
        dec.d = 2;
        dec.m = 3;
        int id = 0;
        // Faces of [0,1]^3.
        dec.patches.push_back(
            detail::square_patch(id++, 3, Vec3{{0, 0, 0}}, Vec3{{1, 0, 0}}, Vec3{{0, 1, 0}})); // z=0
        dec.patches.push_back(
            detail::square_patch(id++, 3, Vec3{{0, 0, 1}}, Vec3{{1, 0, 0}}, Vec3{{0, 1, 0}})); // z=1
        dec.patches.push_back(
            detail::square_patch(id++, 3, Vec3{{0, 0, 0}}, Vec3{{1, 0, 0}}, Vec3{{0, 0, 1}})); // y=0
        dec.patches.push_back(
            detail::square_patch(id++, 3, Vec3{{0, 1, 0}}, Vec3{{1, 0, 0}}, Vec3{{0, 0, 1}})); // y=1
        dec.patches.push_back(
            detail::square_patch(id++, 3, Vec3{{0, 0, 0}}, Vec3{{0, 1, 0}}, Vec3{{0, 0, 1}})); // x=0
        dec.patches.push_back(
            detail::square_patch(id++, 3, Vec3{{1, 0, 0}}, Vec3{{0, 1, 0}}, Vec3{{0, 0, 1}})); // x=1
        derive_interfaces(dec);
        return dec;
    }
    if (name == "fichera-surface") {
        // Boundary of [-1,1]^3 \ [0,1]^3, split into 24 unit squares.
        dec.d = 2;
        dec.m = 3;
        int id = 0;
        auto add = [&](double ox, double oy, double oz, int axis) {
            Vec3 o{{ox, oy, oz}};
            Vec3 e1, e2;
            if (axis == 0) {
                e1 = Vec3{{0, 1, 0}};
                e2 = Vec3{{0, 0, 1}};
            } else if (axis == 1) {
                e1 = Vec3{{1, 0, 0}};
                e2 = Vec3{{0, 0, 1}};
            } else {
                e1 = Vec3{{1, 0, 0}};
                e2 = Vec3{{0, 1, 0}};
            }
            dec.patches.push_back(detail::square_patch(id++, 3, o, e1, e2));
        };
        const double lo[2] = {-1.0, 0.0};
        for (int axis = 0; axis < 3; ++axis) {
            for (int i = 0; i < 2; ++i)
                for (int j = 0; j < 2; ++j) {
                    // outer face at -1: full 2x2 grid of unit squares
                    double o[3] = {0, 0, 0};
                    o[axis] = -1.0;
                    o[(axis + 1) % 3] = lo[i];
                    o[(axis + 2) % 3] = lo[j];
                    add(o[0], o[1], o[2], axis);
                }
            for (int i = 0; i < 2; ++i)
                for (int j = 0; j < 2; ++j) {
                    // outer face at +1: L-shape, the [0,1]x[0,1] square is absent
                    if (i == 1 && j == 1) continue;
                    double o[3] = {0, 0, 0};
                    o[axis] = 1.0;
                    o[(axis + 1) % 3] = lo[i];
                    o[(axis + 2) % 3] = lo[j];
                    add(o[0], o[1], o[2], axis);
                }
            // inner face at 0 bounding the removed octant
            double o[3] = {0, 0, 0};
            o[(axis + 1) % 3] = 0.0;
            o[(axis + 2) % 3] = 0.0;
            add(o[0], o[1], o[2], axis);
        }
        derive_interfaces(dec);
        return dec;
    }
    throw std::invalid_argument("builtin_manifold: unknown name '" + name + "'");
}

} // namespace besovkit
