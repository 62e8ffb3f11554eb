#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <functional>
#include <limits>
#include <stdexcept>
#include <string>
#include <unordered_map>
#include <vector>

#include "besovkit/geometry.hpp"

namespace besovkit {

/// Index xi = (y,t) at level j. `domain` tags the underlying set Gamma so that
/// distances between incompatible grids are rejected.
struct IndexPoint {
    int level = 0;
    Vec3 pos;    // ambient coordinates in R^m
    int tag = 0; // t in T
    std::uint32_t domain = 0;
    int patch = -1; // manifold-backed grids remember their patch
    std::array<double, 3> local{0.0, 0.0, 0.0};
};

/// The pseudometric on Gamma x T: distance of the positions, type tags ignored.
inline double pseudo_dist(const IndexPoint& a, const IndexPoint& b)
{
    if (a.domain != b.domain)
        throw std::invalid_argument("pseudo_dist: points from incompatible domains");
    return dist_euclid(a.pos, b.pos);
}

struct MultiscaleGrid {
    int d = 1;
    bool bounded = true;
    double c1 = 1.0;
    double c2 = 0.5;
    double c3 = 1.0;
    std::uint32_t domain = 0;
    std::vector<std::vector<IndexPoint>> levels;

    int max_level() const { return static_cast<int>(levels.size()) - 1; }

    std::size_t level_size(int j) const
    {
        return levels[static_cast<std::size_t>(j)].size();
    }

    const IndexPoint& at(int j, std::size_t i) const
    {
        return levels[static_cast<std::size_t>(j)][i];
    }

    std::size_t total_size() const
    {
        std::size_t n = 0;
        for (const auto& lvl : levels) n += lvl.size();
        return n;
    }
};

inline std::uint32_t domain_token(const std::string& name)
{
    std::uint32_t h = 2166136261u;
    for (const char c : name) {
        h ^= static_cast<std::uint32_t>(static_cast<unsigned char>(c));
        h *= 16777619u;
    }
    return h;
}

struct NetReport {
    bool ok = false;
    double worst_gap = 0.0;
    Vec3 worst_probe;
};

struct SeparationReport {
    bool ok = false;
    int max_count = 0;
};

struct DimensionReport {
    int count = 0;
    double ratio = 0.0;
};

struct LevelCardinality {
    int level = 0;
    std::size_t count = 0;
    double ratio = 0.0; // count / 2^{dj}
};

/// (A1): every probe point must be within c1*2^{-j} of some xi in level j.
/// Probes are the grid positions `probe_extra_levels` deeper (8x resolution by
/// default); an empty level reports ok=false rather than throwing.
inline NetReport check_net(const MultiscaleGrid& g, int j, int probe_extra_levels = 3)
{
    if (j < 0 || j > g.max_level()) throw std::out_of_range("check_net: level out of range");
    NetReport report;
    const auto& lvl = g.levels[static_cast<std::size_t>(j)];
    if (lvl.empty()) return report; // axiom violated, not an exception

    const int pj = std::min(j + probe_extra_levels, g.max_level());
    const auto& probes = g.levels[static_cast<std::size_t>(pj)];
    const double radius = g.c1 * std::pow(2.0, -j);
    report.ok = true;
    for (const auto& probe : probes) {
        double best = std::numeric_limits<double>::infinity();
        for (const auto& xi : lvl) best = std::min(best, dist_euclid(probe.pos, xi.pos));
        if (best > report.worst_gap) {
            report.worst_gap = best;
            report.worst_probe = probe.pos;
        }
    }
    report.ok = report.worst_gap <= radius;
    return report;
}

/// (A2): max number of level-j indices within c2*2^{-j} of any index
/// (the index itself counts).
inline SeparationReport check_separation(const MultiscaleGrid& g, int j, int cap = 8)
{
    if (j < 0 || j > g.max_level())
        throw std::out_of_range("check_separation: level out of range");
    SeparationReport report;
    const auto& lvl = g.levels[static_cast<std::size_t>(j)];
    const double radius = g.c2 * std::pow(2.0, -j);
    for (const auto& xi : lvl) {
        int count = 0;
        for (const auto& eta : lvl)
            if (dist_euclid(xi.pos, eta.pos) <= radius) ++count;
        report.max_count = std::max(report.max_count, count);
    }
    report.ok = report.max_count <= cap;
    return report;
}

/// (A3): count = max_xi #{xi' : dist <= c3}; ratio = count / 2^{dj}.
inline DimensionReport check_dimension(const MultiscaleGrid& g, int j)
{
    if (j < 0 || j > g.max_level())
        throw std::out_of_range("check_dimension: level out of range");
    DimensionReport report;
    const auto& lvl = g.levels[static_cast<std::size_t>(j)];
    for (const auto& xi : lvl) {
        int count = 0;
        for (const auto& eta : lvl)
            if (dist_euclid(xi.pos, eta.pos) <= g.c3) ++count;
        report.count = std::max(report.count, count);
    }
    report.ratio = report.count / std::pow(2.0, g.d * j);
    return report;
}

/// (A4a): #nabla_j and #nabla_j / 2^{dj} per level.
inline std::vector<LevelCardinality> cardinality_check(const MultiscaleGrid& g)
{
    if (g.levels.empty() || g.total_size() == 0)
        throw std::invalid_argument("cardinality_check: empty grid");
    std::vector<LevelCardinality> out;
    for (int j = 0; j <= g.max_level(); ++j) {
        LevelCardinality lc;
        lc.level = j;
        lc.count = g.level_size(j);
        lc.ratio = static_cast<double>(lc.count) / std::pow(2.0, g.d * j);
        out.push_back(lc);
    }
    return out;
}

/// Dyadic lattice grid on [0,1]^d: step 2^{-j} including endpoints, crossed
/// with the tag set. Constants (sqrt(d), 1/2, 1).
inline MultiscaleGrid build_dyadic_grid(int d, int max_level, int n_tags = 1)
{
    if (max_level < 0) throw std::invalid_argument("build_dyadic_grid: max_level < 0");
    if (d < 1 || d > 3) throw std::invalid_argument("build_dyadic_grid: d must be 1..3");
    if (n_tags < 1) throw std::invalid_argument("build_dyadic_grid: empty tag set");

    MultiscaleGrid g;
    g.d = d;
    g.bounded = true;
    g.c1 = std::sqrt(static_cast<double>(d));
    g.c2 = 0.5;
    g.c3 = 1.0;
    g.domain = domain_token("dyadic-cube-" + std::to_string(d));
    g.levels.resize(static_cast<std::size_t>(max_level) + 1);

    for (int j = 0; j <= max_level; ++j) {
        const int n = (1 << j) + 1;
        const double h = std::pow(2.0, -j);
        auto& lvl = g.levels[static_cast<std::size_t>(j)];
        const int n1 = d > 1 ? n : 1;
        const int n2 = d > 2 ? n : 1;
        for (int i0 = 0; i0 < n; ++i0)
            for (int i1 = 0; i1 < n1; ++i1)
                for (int i2 = 0; i2 < n2; ++i2)
                    for (int t = 0; t < n_tags; ++t) {
                        IndexPoint pt;
                        pt.level = j;
                        pt.pos = Vec3{{i0 * h, d > 1 ? i1 * h : 0.0, d > 2 ? i2 * h : 0.0}};
                        pt.tag = t;
                        pt.domain = g.domain;
                        lvl.push_back(pt);
                    }
    }
    return g;
}

/// Per-patch dyadic lattices mapped through the patch maps; points closer than
/// `merge_tol` in ambient space are merged, ties broken by lowest patch index.
inline MultiscaleGrid lift_grid(const Decomposition& dec, int max_level, int n_tags = 1,
                                double merge_tol = 1e-9)
{
    if (max_level < 0) throw std::invalid_argument("lift_grid: max_level < 0");
    if (n_tags < 1) throw std::invalid_argument("lift_grid: empty tag set");
    const ConformityReport conf = conformity_check(dec, 16);
    if (!conf.ok) throw std::invalid_argument("lift_grid: non-conforming decomposition");

    MultiscaleGrid g;
    g.d = dec.d;
    g.bounded = true;
    g.c1 = std::sqrt(static_cast<double>(dec.d));
    g.c2 = 0.5;
    g.c3 = 1.0;
    g.domain = domain_token("manifold-" + dec.name);
    g.levels.resize(static_cast<std::size_t>(max_level) + 1);

    const double cell = std::max(merge_tol * 100.0, 1e-7);
    for (int j = 0; j <= max_level; ++j) {
        auto& lvl = g.levels[static_cast<std::size_t>(j)];
        std::unordered_map<std::uint64_t, std::vector<std::size_t>> buckets;
        auto key_of = [&](const Vec3& p, int dx, int dy, int dz) {
            const auto qx = static_cast<std::int64_t>(std::floor(p[0] / cell)) + dx;
            const auto qy = static_cast<std::int64_t>(std::floor(p[1] / cell)) + dy;
            const auto qz = static_cast<std::int64_t>(std::floor(p[2] / cell)) + dz;
            std::uint64_t h = 1469598103934665603ull;
            for (std::int64_t q : {qx, qy, qz}) {
                h ^= static_cast<std::uint64_t>(q);
                h *= 1099511628211ull;
            }
            return h;
        };

        const int n = (1 << j) + 1;
        const double h = std::pow(2.0, -j);
        std::vector<Vec3> positions;
        std::vector<std::pair<int, std::array<double, 3>>> origin; // (patch, local)
        for (const auto& patch : dec.patches) {
            const int n1 = dec.d > 1 ? n : 1;
            const int n2 = dec.d > 2 ? n : 1;
            for (int i0 = 0; i0 < n; ++i0)
                for (int i1 = 0; i1 < n1; ++i1)
                    for (int i2 = 0; i2 < n2; ++i2) {
                        const std::array<double, 3> local{
                            i0 * h, dec.d > 1 ? i1 * h : 0.0, dec.d > 2 ? i2 * h : 0.0};
                        const Vec3 y = patch.eval(local);
                        bool duplicate = false;
                        for (int dx = -1; dx <= 1 && !duplicate; ++dx)
                            for (int dy = -1; dy <= 1 && !duplicate; ++dy)
                                for (int dz = -1; dz <= 1 && !duplicate; ++dz) {
                                    auto it = buckets.find(key_of(y, dx, dy, dz));
                                    if (it == buckets.end()) continue;
                                    for (std::size_t idx : it->second)
                                        if (dist_euclid(positions[idx], y) <= merge_tol) {
                                            duplicate = true;
                                            break;
                                        }
                                }
                        if (duplicate) continue;
                        buckets[key_of(y, 0, 0, 0)].push_back(positions.size());
                        positions.push_back(y);
                        origin.emplace_back(patch.id, local);
                    }
        }
        for (std::size_t i = 0; i < positions.size(); ++i)
            for (int t = 0; t < n_tags; ++t) {
                IndexPoint pt;
                pt.level = j;
                pt.pos = positions[i];
                pt.tag = t;
                pt.domain = g.domain;
                pt.patch = origin[i].first;
                pt.local = origin[i].second;
                lvl.push_back(pt);
            }
    }
    return g;
}

/// sum_{xi in nabla_j} [1 + 2^k dist(xi, x)]^{-s}; requires s > d.
inline double layer_sum(const MultiscaleGrid& g, int j, int k, double s, const IndexPoint& x)
{
    if (s <= g.d) throw std::invalid_argument("layer_sum: requires s > d (series diverges)");
    if (j < 0 || j > g.max_level()) throw std::out_of_range("layer_sum: level out of range");
    const double scale = std::pow(2.0, k);
    double sum = 0.0;
    for (const auto& xi : g.levels[static_cast<std::size_t>(j)])
        sum += std::pow(1.0 + scale * pseudo_dist(xi, x), -s);
    return sum;
}

struct LayerSumReport {
    double c_fit = 0.0;   // smallest admissible C over all probed (j,k,x)
    int worst_j = 0;
    int worst_k = 0;
    bool ok = false;
};

/// Fits the single constant C in sum <= C * max{1, 2^{(j-k)s}} over all level
/// pairs j,k <= jk_max and a probe set (grid points of the deepest level,
/// subsampled to at most `max_probes`).
inline LayerSumReport layer_sum_bound_check(const MultiscaleGrid& g, double s, int jk_max = -1,
                                            int max_probes = 32)
{
    if (s <= g.d) throw std::invalid_argument("layer_sum_bound_check: requires s > d");
    if (jk_max < 0 || jk_max > g.max_level()) jk_max = g.max_level();
    LayerSumReport report;

    const auto& probe_lvl = g.levels[static_cast<std::size_t>(jk_max)];
    std::vector<IndexPoint> probes;
    const std::size_t stride = std::max<std::size_t>(1, probe_lvl.size() / max_probes);
    for (std::size_t i = 0; i < probe_lvl.size(); i += stride) probes.push_back(probe_lvl[i]);

    for (int j = 0; j <= jk_max; ++j)
        for (int k = 0; k <= jk_max; ++k) {
            const double bound = std::max(1.0, std::pow(2.0, (j - k) * s));
            for (const auto& x : probes) {
                const double c = layer_sum(g, j, k, s, x) / bound;
                if (c > report.c_fit) {
                    report.c_fit = c;
                    report.worst_j = j;
                    report.worst_k = k;
                }
            }
        }
    report.ok = report.c_fit > 0.0 && std::isfinite(report.c_fit);
    return report;
}

} // namespace besovkit
