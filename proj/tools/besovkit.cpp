#include <CLI11.hpp>

#include <cstdio>
#include <iostream>
#include <string>

#include "besovkit/funcspace.hpp"
#include "besovkit/io.hpp"
#include "besovkit/nterm.hpp"

using namespace besovkit;

namespace {

// exit codes: 0 success, 1 check failure, 2 usage or input error
constexpr int exit_ok = 0;
constexpr int exit_check_failed = 1;
constexpr int exit_usage = 2;

struct RunConfig {
    std::uint64_t seed = 42;
    unsigned threads = 0; // 0: default
    double tol = 1e-9;
};

BesovParams parse_tuple(const std::string& s, int d)
{
    BesovParams prm;
    prm.d = d;
    double vals[3] = {0.0, 2.0, 2.0};
    std::size_t pos = 0;
    for (int i = 0; i < 3; ++i) {
        std::size_t comma = s.find(',', pos);
        const std::string field =
            s.substr(pos, comma == std::string::npos ? std::string::npos : comma - pos);
        if (field == "inf")
            vals[i] = q_infinity;
        else
            vals[i] = std::stod(field);
        if (comma == std::string::npos) break;
        pos = comma + 1;
    }
    prm.alpha = vals[0];
    prm.p = vals[1];
    prm.q = vals[2];
    return prm;
}

std::string base_dir_of(const std::string& path)
{
    const auto slash = path.find_last_of('/');
    return slash == std::string::npos ? std::string(".") : path.substr(0, slash);
}

std::shared_ptr<const WaveletSystem> build_system(const std::string& basis_spec,
                                                  const std::string& manifold, int levels)
{
    auto [D, Dt] = parse_basis_spec(basis_spec);
    auto uni = std::make_shared<const UnivariateSystem>(D, Dt);
    auto dec = std::make_shared<const Decomposition>(builtin_manifold(manifold));
    return std::make_shared<const WaveletSystem>(uni, dec, levels);
}

ScaleMatrix load_matrix(const std::string& path)
{
    if (path.size() >= 4 && path.substr(path.size() - 4) == ".bin")
        return matrix_from_binary(path);
    return matrix_from_json(load_json_file(path));
}

} // namespace

int main(int argc, char** argv)
{
    CLI::App app{"besovkit: Besov-type sequence spaces, almost-diagonal operators,\n"
                 "and patchwise spline wavelet experiments"};
    app.require_subcommand(1);

    RunConfig cfg;
    app.add_option("--seed", cfg.seed, "seed recorded in every output artifact");
    app.add_option("--threads", cfg.threads, "worker parallelism bound (default: cores)");
    app.add_option("--tol", cfg.tol, "tolerance for check-style commands");

    // ---------------------------------------------------------- grid
    auto* grid_cmd = app.add_subcommand("grid", "build and check multiscale grids");
    grid_cmd->require_subcommand(1);

    std::string grid_out, grid_manifold;
    int grid_d = 1, grid_J = 4, grid_tags = 1;
    auto* grid_build = grid_cmd->add_subcommand("build", "build a dyadic or lifted grid");
    grid_build->add_option("--d", grid_d, "dimension (dyadic cube grid)");
    grid_build->add_option("--max-level", grid_J, "finest level J")->required();
    grid_build->add_option("--tags", grid_tags, "number of type tags");
    grid_build->add_option("--manifold", grid_manifold, "lift per-patch grids from a catalog manifold");
    grid_build->add_option("--out", grid_out, "output grid JSON")->required();

    std::string grid_in, grid_axiom = "a1";
    auto* grid_check = grid_cmd->add_subcommand("check", "check grid axioms");
    grid_check->add_option("--input", grid_in, "grid JSON")->required();
    grid_check->add_option("--axiom", grid_axiom, "a1|a2|a3|a4")->required();
    int grid_check_level = -1, grid_check_max = -1;
    grid_check->add_option("--level", grid_check_level, "restrict to one level");
    grid_check->add_option("--max-level", grid_check_max, "check levels 0..J only");

    // ---------------------------------------------------------- norm
    auto* norm_cmd = app.add_subcommand("norm", "evaluate a sequence quasi-norm");
    double n_alpha = 0.0, n_p = 2.0;
    std::string n_q = "2", n_seq;
    norm_cmd->add_option("--alpha", n_alpha)->required();
    norm_cmd->add_option("--p", n_p)->required();
    norm_cmd->add_option("--q", n_q)->required();
    norm_cmd->add_option("--seq", n_seq, "sequence JSON")->required();

    // ---------------------------------------------------------- embed
    auto* embed_cmd = app.add_subcommand("embed", "standard embedding predicate");
    std::string e_from, e_to;
    bool e_bounded = true, e_unbounded = false;
    int e_d = 1;
    embed_cmd->add_option("--from", e_from, "alpha,p,q")->required();
    embed_cmd->add_option("--to", e_to, "alpha,p,q")->required();
    embed_cmd->add_flag("--bounded", e_bounded, "bounded regime (default)");
    embed_cmd->add_flag("--unbounded", e_unbounded, "unbounded regime");
    embed_cmd->add_option("--d", e_d, "dimension");

    // ---------------------------------------------------------- ad
    auto* ad_cmd = app.add_subcommand("ad", "almost-diagonal matrix operations");
    ad_cmd->require_subcommand(1);
    std::string ad_matrix, ad_seq, ad_out;
    double ad_a0 = 0.0, ad_a1 = 0.0, ad_p = 2.0, ad_eps = 0.5, ad_cap = 1.0;
    auto* ad_check = ad_cmd->add_subcommand("check", "membership sup-ratio");
    auto* ad_fit = ad_cmd->add_subcommand("fit", "largest epsilon with sup-ratio <= cap");
    auto* ad_apply = ad_cmd->add_subcommand("apply", "apply the matrix to a sequence");
    for (auto* sub : {ad_check, ad_fit, ad_apply}) {
        sub->add_option("--matrix", ad_matrix, "matrix JSON or .bin")->required();
        sub->add_option("--alpha0", ad_a0);
        sub->add_option("--alpha1", ad_a1);
        sub->add_option("--p", ad_p);
    }
    ad_check->add_option("--eps", ad_eps);
    ad_fit->add_option("--cap", ad_cap);
    ad_apply->add_option("--seq", ad_seq, "input sequence JSON")->required();
    ad_apply->add_option("--out", ad_out, "output sequence JSON")->required();

    // ---------------------------------------------------------- manifold
    auto* man_cmd = app.add_subcommand("manifold", "catalog manifolds");
    man_cmd->require_subcommand(1);
    std::string man_name, man_input, man_out;
    auto* man_check = man_cmd->add_subcommand("check", "conformity check");
    auto* man_info = man_cmd->add_subcommand("info", "patch and interface summary");
    for (auto* sub : {man_check, man_info}) {
        sub->add_option("--name", man_name, "catalog manifold");
        sub->add_option("--input", man_input, "manifold JSON instead of a catalog name");
    }
    man_info->add_option("--out", man_out, "export the manifold JSON");

    // ---------------------------------------------------------- gramian
    auto* gram_cmd = app.add_subcommand("gramian", "cross-basis Gramian matrix");
    std::string g_basis_a = "spline:D=1,Dt=1", g_basis_b = "spline:D=2,Dt=2";
    std::string g_manifold = "interval", g_out;
    int g_levels = 4;
    gram_cmd->add_option("--basis-a", g_basis_a, "primal system Psi");
    gram_cmd->add_option("--basis-b", g_basis_b, "dual-side system Phi");
    gram_cmd->add_option("--manifold", g_manifold);
    gram_cmd->add_option("--levels", g_levels);
    gram_cmd->add_option("--out", g_out, "output .bin or .json")->required();

    // ---------------------------------------------------------- equivalence
    auto* eq_cmd = app.add_subcommand("equivalence", "norm-equivalence ratio bands");
    std::string eq_corpus = "default", eq_manifold = "interval";
    std::string eq_basis_a = "spline:D=1,Dt=1", eq_basis_b = "spline:D=2,Dt=2";
    double eq_alpha = 0.3, eq_p = 2.0;
    std::string eq_q = "2", eq_levels = "4,5,6", eq_out;
    eq_cmd->add_option("--corpus", eq_corpus, "only 'default' is built in");
    eq_cmd->add_option("--manifold", eq_manifold);
    eq_cmd->add_option("--basis-a", eq_basis_a);
    eq_cmd->add_option("--basis-b", eq_basis_b);
    eq_cmd->add_option("--alpha", eq_alpha);
    eq_cmd->add_option("--p", eq_p);
    eq_cmd->add_option("--q", eq_q);
    eq_cmd->add_option("--levels", eq_levels, "comma-separated truncation levels");
    eq_cmd->add_option("--out", eq_out, "report JSON path");

    // ---------------------------------------------------------- nterm
    auto* nterm_cmd = app.add_subcommand("nterm", "greedy n-term error curve");
    std::string nt_seq, nt_target = "0,2,2", nt_csv;
    std::size_t nt_max_n = 64;
    nterm_cmd->add_option("--seq", nt_seq, "sequence JSON")->required();
    nterm_cmd->add_option("--target", nt_target, "alpha,p,q");
    nterm_cmd->add_option("--max-n", nt_max_n);
    nterm_cmd->add_option("--csv", nt_csv, "output CSV")->required();

    // ---------------------------------------------------------- diagram
    auto* diag_cmd = app.add_subcommand("diagram", "DeVore-Triebel diagram CSV");
    int dg_d = 2;
    std::string dg_csv, dg_points;
    diag_cmd->add_option("--d", dg_d);
    diag_cmd->add_option("--csv", dg_csv, "output CSV")->required();
    diag_cmd->add_option("--points", dg_points, "semicolon-separated alpha,p,q tuples");

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        if (e.get_exit_code() == 0) return app.exit(e); // --help
        app.exit(e);
        return exit_usage;
    }

    if (cfg.threads == 0) cfg.threads = default_threads();

    try {
        if (grid_build->parsed()) {
            MultiscaleGrid g = grid_manifold.empty()
                                   ? build_dyadic_grid(grid_d, grid_J, grid_tags)
                                   : lift_grid(builtin_manifold(grid_manifold), grid_J, grid_tags);
            write_text_file(grid_out, grid_to_json(g).dump(2) + "\n");
            std::printf("wrote %s (%zu points)\n", grid_out.c_str(), g.total_size());
            return exit_ok;
        }
        if (grid_check->parsed()) {
            auto g = grid_from_json(load_json_file(grid_in));
            json report = make_report("grid-check", cfg.seed);
            report["axiom"] = grid_axiom;
            bool ok = true;
            const int j_lo = grid_check_level >= 0 ? grid_check_level : 0;
            int j_hi = grid_check_level >= 0 ? grid_check_level : g.max_level();
            if (grid_check_max >= 0) j_hi = std::min(j_hi, grid_check_max);
            json per_level = json::array();
            for (int j = j_lo; j <= j_hi; ++j) {
                json row;
                row["level"] = j;
                if (grid_axiom == "a1") {
                    auto r = check_net(g, j);
                    row["ok"] = r.ok;
                    row["worst_gap"] = r.worst_gap;
                    ok = ok && r.ok;
                } else if (grid_axiom == "a2") {
                    auto r = check_separation(g, j);
                    row["ok"] = r.ok;
                    row["max_count"] = r.max_count;
                    ok = ok && r.ok;
                } else if (grid_axiom == "a3") {
                    auto r = check_dimension(g, j);
                    row["count"] = r.count;
                    row["ratio"] = r.ratio;
                } else if (grid_axiom == "a4") {
                    auto rows = cardinality_check(g);
                    row["count"] = rows[static_cast<std::size_t>(j)].count;
                    row["ratio"] = rows[static_cast<std::size_t>(j)].ratio;
                } else {
                    std::fprintf(stderr, "unknown axiom '%s'\n", grid_axiom.c_str());
                    return exit_usage;
                }
                per_level.push_back(row);
            }
            report["levels"] = per_level;
            report["ok"] = ok;
            std::cout << report.dump(2) << "\n";
            return ok ? exit_ok : exit_check_failed;
        }
        if (norm_cmd->parsed()) {
            auto seq = sequence_from_json(load_json_file(n_seq), base_dir_of(n_seq));
            BesovParams prm = parse_tuple(format_double(n_alpha) + "," + format_double(n_p) +
                                              "," + n_q,
                                          seq.grid().d);
            std::printf("%s\n", format_double(quasi_norm(seq, prm)).c_str());
            return exit_ok;
        }
        if (embed_cmd->parsed()) {
            const bool bounded = !e_unbounded;
            const bool yes =
                embedding_exists(parse_tuple(e_from, e_d), parse_tuple(e_to, e_d), bounded);
            std::printf("%s\n", yes ? "true" : "false");
            return exit_ok;
        }
        if (ad_check->parsed()) {
            auto M = load_matrix(ad_matrix);
            AdParams prm{ad_a0, ad_a1, ad_p, ad_eps, M.row_grid().d};
            auto r = ad_membership(M, prm);
            json report = make_report("ad-check", cfg.seed);
            report["sup_ratio"] = r.sup_ratio;
            report["witness"] = {
                {"j", r.witness_j}, {"k", r.witness_k}, {"row", r.witness_row}, {"col", r.witness_col}};
            std::cout << report.dump(2) << "\n";
            return exit_ok;
        }
        if (ad_fit->parsed()) {
            auto M = load_matrix(ad_matrix);
            const double eps = ad_fit_epsilon(M, ad_a0, ad_a1, ad_p, ad_cap);
            std::printf("%s\n", format_double(eps).c_str());
            return exit_ok;
        }
        if (ad_apply->parsed()) {
            auto M = load_matrix(ad_matrix);
            auto a = sequence_from_json(load_json_file(ad_seq), base_dir_of(ad_seq));
            auto out = apply(M, a);
            write_text_file(ad_out, sequence_to_json(out).dump(2) + "\n");
            std::printf("wrote %s (%zu entries)\n", ad_out.c_str(), out.support_size());
            return exit_ok;
        }
        if (man_check->parsed() || man_info->parsed()) {
            if (man_name.empty() && man_input.empty()) {
                std::fprintf(stderr, "manifold: need --name or --input\n");
                return exit_usage;
            }
            Decomposition dec = man_input.empty()
                                    ? builtin_manifold(man_name)
                                    : decomposition_from_json(load_json_file(man_input));
            auto report = conformity_check(dec, 64, cfg.tol);
            if (!man_out.empty()) write_text_file(man_out, decomposition_to_json(dec).dump(2) + "\n");
            json out = make_report(man_info->parsed() ? "manifold-info" : "manifold-check",
                                   cfg.seed);
            out["name"] = dec.name;
            out["d"] = dec.d;
            out["m"] = dec.m;
            out["patches"] = dec.n_patches();
            out["interfaces"] = dec.interfaces.size();
            int pure = 0;
            for (const auto& itf : dec.interfaces)
                if (itf.perm.is_pure_permutation()) ++pure;
            out["pure_permutation_interfaces"] = pure;
            double worst = 0.0;
            for (const auto& ir : report.interfaces) worst = std::max(worst, ir.max_deviation);
            out["max_interface_deviation"] = worst;
            out["ok"] = report.ok;
            std::cout << out.dump(2) << "\n";
            return report.ok ? exit_ok : exit_check_failed;
        }
        if (gram_cmd->parsed()) {
            auto psi = build_system(g_basis_a, g_manifold, g_levels);
            auto phi = build_system(g_basis_b, g_manifold, g_levels);
            auto G = gramian(*psi, *phi, g_levels);
            if (g_out.size() >= 4 && g_out.substr(g_out.size() - 4) == ".bin")
                matrix_to_binary(G, g_out);
            else
                write_text_file(g_out, matrix_to_json(G).dump() + "\n");
            std::printf("wrote %s (%zu nonzeros)\n", g_out.c_str(), G.nnz());
            return exit_ok;
        }
        if (eq_cmd->parsed()) {
            if (eq_corpus != "default") {
                std::fprintf(stderr, "unknown corpus '%s'\n", eq_corpus.c_str());
                return exit_usage;
            }
            std::vector<int> Js;
            std::size_t pos = 0;
            while (pos < eq_levels.size()) {
                auto comma = eq_levels.find(',', pos);
                Js.push_back(std::stoi(eq_levels.substr(pos, comma - pos)));
                if (comma == std::string::npos) break;
                pos = comma + 1;
            }
            const int Jmax = *std::max_element(Js.begin(), Js.end());
            auto psi = build_system(eq_basis_a, eq_manifold, Jmax);
            auto phi = build_system(eq_basis_b, eq_manifold, Jmax);
            BesovParams prm = parse_tuple(format_double(eq_alpha) + "," + format_double(eq_p) +
                                              "," + eq_q,
                                          psi->dim());
            auto corpus = default_corpus(psi->decomposition());
            auto rep = equivalence_ratio(corpus, psi, phi, prm, Js, psi->dim() == 1 ? 2 : 1,
                                         cfg.threads);
            json out = make_report("equivalence", cfg.seed);
            out["alpha"] = prm.alpha;
            out["p"] = prm.p;
            out["q"] = std::isinf(prm.q) ? json("inf") : json(prm.q);
            json per_j = json::array();
            for (const auto& pl : rep.per_j)
                per_j.push_back(
                    {{"J", pl.J}, {"min_ratio", pl.min_ratio}, {"max_ratio", pl.max_ratio}});
            out["per_level"] = per_j;
            out["min_ratio"] = rep.min_ratio;
            out["max_ratio"] = rep.max_ratio;
            const std::string text = out.dump(2) + "\n";
            if (!eq_out.empty()) write_text_file(eq_out, text);
            std::cout << text;
            return exit_ok;
        }
        if (nterm_cmd->parsed()) {
            auto a = sequence_from_json(load_json_file(nt_seq), base_dir_of(nt_seq));
            BesovParams target = parse_tuple(nt_target, a.grid().d);
            std::vector<std::size_t> schedule;
            for (std::size_t n = 1; n <= nt_max_n; n *= 2) schedule.push_back(n);
            auto curve = error_curve(a, target, schedule);
            std::string csv = "n,error\n";
            for (const auto& [n, err] : curve.points)
                csv += std::to_string(n) + "," + format_double(err) + "\n";
            write_text_file(nt_csv, csv);
            std::printf("wrote %s (%zu points)\n", nt_csv.c_str(), curve.points.size());
            return exit_ok;
        }
        if (diag_cmd->parsed()) {
            std::vector<BesovParams> points;
            std::size_t pos = 0;
            while (pos < dg_points.size()) {
                auto semi = dg_points.find(';', pos);
                points.push_back(parse_tuple(dg_points.substr(pos, semi - pos), dg_d));
                if (semi == std::string::npos) break;
                pos = semi + 1;
            }
            write_text_file(dg_csv, diagram_export(points, dg_d));
            std::printf("wrote %s\n", dg_csv.c_str());
            return exit_ok;
        }
    } catch (const std::exception& e) {
        std::fprintf(stderr, "error: %s\n", e.what());
        return exit_usage;
    }
    return exit_usage;
}
