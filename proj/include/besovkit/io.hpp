#pragma once

#include <cstdio>
#include <cstdlib>
#include <cstring>
#include <fstream>
#include <sstream>
#include <stdexcept>
#include <string>
#include <thread>
#include <vector>

#include <json.hpp>

#include "besovkit/admat.hpp"
#include "besovkit/grid.hpp"
#include "besovkit/seq.hpp"

namespace besovkit {

using json = nlohmann::ordered_json;

/// Run fn(0..n-1) on up to `threads` workers; results must go into
/// preallocated slots so the outcome does not depend on scheduling.
template <typename Fn>
void parallel_for_slots(std::size_t n, unsigned threads, Fn&& fn)
{
    if (threads <= 1 || n <= 1) {
        for (std::size_t i = 0; i < n; ++i) fn(i);
        return;
    }
    const unsigned workers = std::min<unsigned>(threads, static_cast<unsigned>(n));
    std::vector<std::thread> pool;
    for (unsigned w = 0; w < workers; ++w)
        pool.emplace_back([&, w] {
            for (std::size_t i = w; i < n; i += workers) fn(i);
        });
    for (auto& t : pool) t.join();
}

inline unsigned default_threads()
{
    if (const char* env = std::getenv("BESOVKIT_THREADS")) {
        const int v = std::atoi(env);
        if (v >= 1) return static_cast<unsigned>(v);
    }
    const unsigned hw = std::thread::hardware_concurrency();
    return hw ? hw : 1;
}

// ---------------------------------------------------------------------------
// grid JSON: {d, bounded, constants:{c1,c2,c3}, levels:[[{j,y:[...],t}]]}

inline json grid_to_json(const MultiscaleGrid& g)
{
    json out;
    out["d"] = g.d;
    out["bounded"] = g.bounded;
    out["constants"] = {{"c1", g.c1}, {"c2", g.c2}, {"c3", g.c3}};
    json levels = json::array();
    for (int j = 0; j <= g.max_level(); ++j) {
        json lvl = json::array();
        for (const auto& pt : g.levels[static_cast<std::size_t>(j)]) {
            json y = json::array();
            for (int c = 0; c < 3; ++c)
                if (c == 0 || pt.pos[c] != 0.0 || c < g.d) y.push_back(pt.pos[c]);
            lvl.push_back({{"j", j}, {"y", y}, {"t", pt.tag}});
        }
        levels.push_back(lvl);
    }
    out["levels"] = levels;
    return out;
}

inline MultiscaleGrid grid_from_json(const json& in)
{
    MultiscaleGrid g;
    g.d = in.at("d").get<int>();
    g.bounded = in.at("bounded").get<bool>();
    g.c1 = in.at("constants").at("c1").get<double>();
    g.c2 = in.at("constants").at("c2").get<double>();
    g.c3 = in.at("constants").at("c3").get<double>();

    // The schema carries no manifold identity, so grids loaded from files are
    // treated as living on a common ambient set per dimension; keeping the
    // coordinates consistent across files is the caller's responsibility.
    g.domain = domain_token("json-grid-d" + std::to_string(g.d));

    const auto& levels = in.at("levels");
    g.levels.resize(levels.size());
    for (std::size_t j = 0; j < levels.size(); ++j) {
        for (const auto& ptj : levels[j]) {
            IndexPoint pt;
            pt.level = ptj.at("j").get<int>();
            if (pt.level != static_cast<int>(j))
                throw std::invalid_argument("grid_from_json: level slot mismatch");
            const auto& y = ptj.at("y");
            for (std::size_t c = 0; c < y.size() && c < 3; ++c)
                pt.pos[static_cast<int>(c)] = y[c].get<double>();
            pt.tag = ptj.at("t").get<int>();
            g.levels[j].push_back(pt);
        }
    }
    for (auto& lvl : g.levels)
        for (auto& pt : lvl) pt.domain = g.domain;
    return g;
}

// ---------------------------------------------------------------------------
// manifold JSON: {d, m, patches:[{id,kind,coeffs}], interfaces:[{i,j,face_i,face_j,perm,flip}]}

inline json decomposition_to_json(const Decomposition& dec)
{
    json out;
    out["d"] = dec.d;
    out["m"] = dec.m;
    out["name"] = dec.name;
    json patches = json::array();
    for (const auto& p : dec.patches) {
        json pj;
        pj["id"] = p.id;
        if (const auto* aff = std::get_if<AffineMap>(&p.map)) {
            pj["kind"] = "affine";
            // coeffs: row-major A (m x d) followed by b (m)
            json coeffs = json::array();
            for (int r = 0; r < dec.m; ++r)
                for (int c = 0; c < dec.d; ++c) coeffs.push_back(aff->A[r][c]);
            for (int r = 0; r < dec.m; ++r) coeffs.push_back(aff->b[r]);
            pj["coeffs"] = coeffs;
        } else {
            const auto& bez = std::get<BezierMap>(p.map);
            pj["kind"] = "bezier";
            json coeffs = json::array();
            for (int ax = 0; ax < dec.d; ++ax) coeffs.push_back(bez.degree[ax]);
            for (const auto& ctrl : bez.ctrl)
                for (int r = 0; r < dec.m; ++r) coeffs.push_back(ctrl[r]);
            pj["coeffs"] = coeffs;
        }
        patches.push_back(pj);
    }
    out["patches"] = patches;
    json interfaces = json::array();
    for (const auto& itf : dec.interfaces) {
        json ij;
        ij["i"] = itf.patch_i;
        ij["j"] = itf.patch_j;
        ij["face_i"] = itf.face_i;
        ij["face_j"] = itf.face_j;
        json perm = json::array();
        json flip = json::array();
        for (int ax = 0; ax < dec.d; ++ax) {
            perm.push_back(itf.perm.perm[ax]);
            flip.push_back(itf.perm.flip[ax] ? 1 : 0);
        }
        ij["perm"] = perm;
        ij["flip"] = flip;
        interfaces.push_back(ij);
    }
    out["interfaces"] = interfaces;
    return out;
}

inline Decomposition decomposition_from_json(const json& in)
{
    Decomposition dec;
    dec.d = in.at("d").get<int>();
    dec.m = in.at("m").get<int>();
    dec.name = in.value("name", std::string("json-manifold"));
    for (const auto& pj : in.at("patches")) {
        Patch p;
        p.id = pj.at("id").get<int>();
        p.d = dec.d;
        p.m = dec.m;
        const auto& coeffs = pj.at("coeffs");
        const std::string kind = pj.at("kind").get<std::string>();
        if (kind == "affine") {
            AffineMap aff;
            aff.d = dec.d;
            aff.m = dec.m;
            std::size_t idx = 0;
            for (int r = 0; r < dec.m; ++r)
                for (int c = 0; c < dec.d; ++c) aff.A[r][c] = coeffs.at(idx++).get<double>();
            for (int r = 0; r < dec.m; ++r) aff.b[r] = coeffs.at(idx++).get<double>();
            p.map = aff;
        } else if (kind == "bezier") {
            BezierMap bez;
            bez.d = dec.d;
            bez.m = dec.m;
            std::size_t idx = 0;
            int n_ctrl = 1;
            for (int ax = 0; ax < dec.d; ++ax) {
                bez.degree[ax] = coeffs.at(idx++).get<int>();
                n_ctrl *= bez.degree[ax] + 1;
            }
            for (int c = 0; c < n_ctrl; ++c) {
                Vec3 v;
                for (int r = 0; r < dec.m; ++r) v[r] = coeffs.at(idx++).get<double>();
                bez.ctrl.push_back(v);
            }
            p.map = bez;
        } else {
            throw std::invalid_argument("decomposition_from_json: unknown patch kind " + kind);
        }
        dec.patches.push_back(p);
    }
    for (const auto& ij : in.at("interfaces")) {
        Interface itf;
        itf.patch_i = ij.at("i").get<int>();
        itf.patch_j = ij.at("j").get<int>();
        itf.face_i = ij.at("face_i").get<int>();
        itf.face_j = ij.at("face_j").get<int>();
        const auto& perm = ij.at("perm");
        for (std::size_t ax = 0; ax < perm.size() && ax < 3; ++ax)
            itf.perm.perm[ax] = perm[ax].get<int>();
        if (ij.contains("flip")) {
            const auto& flip = ij.at("flip");
            for (std::size_t ax = 0; ax < flip.size() && ax < 3; ++ax)
                itf.perm.flip[ax] = flip[ax].get<int>() != 0;
        }
        dec.interfaces.push_back(itf);
    }
    return dec;
}

// ---------------------------------------------------------------------------
// sequence JSON: {grid: {...} | grid_ref: "path", entries:[{j,xi_index,re,im}]}

inline json sequence_to_json(const CoeffSequence& a, const std::string& grid_ref = "")
{
    json out;
    if (grid_ref.empty())
        out["grid"] = grid_to_json(a.grid());
    else
        out["grid_ref"] = grid_ref;
    json entries = json::array();
    for (int j = 0; j <= a.max_level(); ++j)
        for (const auto& e : a.level(j))
            entries.push_back({{"j", j},
                               {"xi_index", e.first},
                               {"re", e.second.real()},
                               {"im", e.second.imag()}});
    out["entries"] = entries;
    return out;
}

inline json load_json_file(const std::string& path)
{
    std::ifstream in(path);
    if (!in) throw std::invalid_argument("cannot open file: " + path);
    json j;
    in >> j;
    return j;
}

inline CoeffSequence sequence_from_json(const json& in, const std::string& base_dir = "")
{
    std::shared_ptr<const MultiscaleGrid> grid;
    if (in.contains("grid")) {
        grid = std::make_shared<const MultiscaleGrid>(grid_from_json(in.at("grid")));
    } else if (in.contains("grid_ref")) {
        std::string path = in.at("grid_ref").get<std::string>();
        if (!base_dir.empty() && !path.empty() && path.front() != '/')
            path = base_dir + "/" + path;
        grid = std::make_shared<const MultiscaleGrid>(grid_from_json(load_json_file(path)));
    } else {
        throw std::invalid_argument("sequence_from_json: missing grid or grid_ref");
    }
    CoeffSequence a(grid);
    for (const auto& e : in.at("entries"))
        a.set(e.at("j").get<int>(), e.at("xi_index").get<std::uint32_t>(),
              Complex(e.at("re").get<double>(), e.at("im").get<double>()));
    return a;
}

// ---------------------------------------------------------------------------
// matrix JSON and binary: per-block COO triplets

inline json matrix_to_json(const ScaleMatrix& M)
{
    json out;
    out["row_grid"] = grid_to_json(M.row_grid());
    out["col_grid"] = grid_to_json(M.col_grid());
    json blocks = json::array();
    for (const auto& [key, trips] : M.blocks()) {
        json entries = json::array();
        for (const auto& t : trips)
            entries.push_back({t.row, t.col, t.value.real(), t.value.imag()});
        blocks.push_back({{"j", key.first}, {"k", key.second}, {"entries", entries}});
    }
    out["blocks"] = blocks;
    return out;
}

inline ScaleMatrix matrix_from_json(const json& in)
{
    auto rg = std::make_shared<const MultiscaleGrid>(grid_from_json(in.at("row_grid")));
    auto cg = std::make_shared<const MultiscaleGrid>(grid_from_json(in.at("col_grid")));
    ScaleMatrix M(rg, cg);
    for (const auto& blk : in.at("blocks")) {
        const int j = blk.at("j").get<int>();
        const int k = blk.at("k").get<int>();
        for (const auto& e : blk.at("entries"))
            M.add(j, k, e[0].get<std::uint32_t>(), e[1].get<std::uint32_t>(),
                  Complex(e[2].get<double>(), e[3].get<double>()));
    }
    M.finalize();
    return M;
}

/// Binary layout: magic "BKMX1\n", two length-prefixed grid JSON blobs,
/// u64 block count, then per block: i32 j, i32 k, u64 nnz, nnz x
/// (u32 row, u32 col, f64 re, f64 im).
inline void matrix_to_binary(const ScaleMatrix& M, const std::string& path)
{
    std::ofstream out(path, std::ios::binary);
    if (!out) throw std::invalid_argument("cannot open file for writing: " + path);
    const char magic[6] = {'B', 'K', 'M', 'X', '1', '\n'};
    out.write(magic, 6);
    auto write_blob = [&](const std::string& s) {
        const std::uint64_t len = s.size();
        out.write(reinterpret_cast<const char*>(&len), 8);
        out.write(s.data(), static_cast<std::streamsize>(s.size()));
    };
    write_blob(grid_to_json(M.row_grid()).dump());
    write_blob(grid_to_json(M.col_grid()).dump());
    const std::uint64_t n_blocks = M.blocks().size();
    out.write(reinterpret_cast<const char*>(&n_blocks), 8);
    for (const auto& [key, trips] : M.blocks()) {
        const std::int32_t j = key.first, k = key.second;
        out.write(reinterpret_cast<const char*>(&j), 4);
        out.write(reinterpret_cast<const char*>(&k), 4);
        const std::uint64_t nnz = trips.size();
        out.write(reinterpret_cast<const char*>(&nnz), 8);
        for (const auto& t : trips) {
            out.write(reinterpret_cast<const char*>(&t.row), 4);
            out.write(reinterpret_cast<const char*>(&t.col), 4);
            const double re = t.value.real(), im = t.value.imag();
            out.write(reinterpret_cast<const char*>(&re), 8);
            out.write(reinterpret_cast<const char*>(&im), 8);
        }
    }
}

inline ScaleMatrix matrix_from_binary(const std::string& path)
{
    std::ifstream in(path, std::ios::binary);
    if (!in) throw std::invalid_argument("cannot open file: " + path);
    char magic[6];
    in.read(magic, 6);
    if (std::string(magic, 6) != "BKMX1\n")
        throw std::invalid_argument("matrix_from_binary: bad magic");
    auto read_blob = [&]() {
        std::uint64_t len = 0;
        in.read(reinterpret_cast<char*>(&len), 8);
        std::string s(len, '\0');
        in.read(s.data(), static_cast<std::streamsize>(len));
        return s;
    };
    auto rg = std::make_shared<const MultiscaleGrid>(grid_from_json(json::parse(read_blob())));
    auto cg = std::make_shared<const MultiscaleGrid>(grid_from_json(json::parse(read_blob())));
    ScaleMatrix M(rg, cg);
    std::uint64_t n_blocks = 0;
    in.read(reinterpret_cast<char*>(&n_blocks), 8);
    for (std::uint64_t b = 0; b < n_blocks; ++b) {
        std::int32_t j = 0, k = 0;
        std::uint64_t nnz = 0;
        in.read(reinterpret_cast<char*>(&j), 4);
        in.read(reinterpret_cast<char*>(&k), 4);
        in.read(reinterpret_cast<char*>(&nnz), 8);
        for (std::uint64_t t = 0; t < nnz; ++t) {
            std::uint32_t row = 0, col = 0;
            double re = 0.0, im = 0.0;
            in.read(reinterpret_cast<char*>(&row), 4);
            in.read(reinterpret_cast<char*>(&col), 4);
            in.read(reinterpret_cast<char*>(&re), 8);
            in.read(reinterpret_cast<char*>(&im), 8);
            M.add(j, k, row, col, Complex(re, im));
        }
    }
    M.finalize();
    return M;
}

// ---------------------------------------------------------------------------
// report writer: stable schemas, 17 significant digits, recorded seed

inline std::string format_double(double v)
{
    char buf[64];
    std::snprintf(buf, sizeof(buf), "%.17g", v);
    return buf;
}

inline void write_text_file(const std::string& path, const std::string& content)
{
    std::ofstream out(path);
    if (!out) throw std::invalid_argument("cannot open file for writing: " + path);
    out << content;
}

inline json make_report(const std::string& kind, std::uint64_t seed)
{
    json report;
    report["kind"] = kind;
    report["seed"] = seed;
    return report;
}

} // namespace besovkit
