// tla: t-product regularization toolbox command line.
//
// Subcommands:
//   gen        build a test problem and save it as T3D1 files
//   solve      run one method on one problem / noise level
//   bench      run a (method x noise level) grid, CSV out
//   sweep-eps  rtsvd epsilon sensitivity sweep, CSV out

#include "tla/solvers.hpp"
#include "tla/testprob.hpp"

#include <CLI11.hpp>

#include <cmath>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <map>
#include <sstream>

namespace {

using namespace tla;

constexpr uint64_t kLevelSeedStride = 0x2545F4914F6CDD1Dull;

// Flat key=value configuration with command-line overrides.
struct Config {
    std::map<std::string, std::string> kv;

    void load(const std::string& path) {
        std::ifstream in(path);
        if (!in) throw CLI::ValidationError("config", "cannot open " + path);
        std::string line;
        int lineno = 0;
        while (std::getline(in, line)) {
            ++lineno;
            const auto hash = line.find('#');
            if (hash != std::string::npos) line.erase(hash);
            const auto first = line.find_first_not_of(" \t\r");
            if (first == std::string::npos) continue;
            const auto eq = line.find('=');
            if (eq == std::string::npos)
                throw CLI::ValidationError("config",
                                           path + ":" + std::to_string(lineno) + ": expected key=value");
            auto trim = [](std::string s) {
                const auto a = s.find_first_not_of(" \t\r");
                const auto b = s.find_last_not_of(" \t\r");
                return a == std::string::npos ? std::string() : s.substr(a, b - a + 1);
            };
            kv[trim(line.substr(0, eq))] = trim(line.substr(eq + 1));
        }
    }

    bool has(const std::string& k) const { return kv.count(k) != 0; }
    std::string str(const std::string& k, const std::string& dflt = "") const {
        auto it = kv.find(k);
        return it == kv.end() ? dflt : it->second;
    }
    double num(const std::string& k, double dflt) const {
        auto it = kv.find(k);
        return it == kv.end() ? dflt : std::stod(it->second);
    }
    long integer(const std::string& k, long dflt) const {
        auto it = kv.find(k);
        return it == kv.end() ? dflt : std::stol(it->second);
    }
    std::vector<std::string> list(const std::string& k) const {
        std::vector<std::string> out;
        std::stringstream ss(str(k));
        std::string item;
        while (std::getline(ss, item, ','))
            if (!item.empty()) out.push_back(item);
        return out;
    }
};

Tensor3 ones_solution(Index m, Index p, Index n) {
    Tensor3 x(m, p, n);
    for (Index k = 0; k < n; ++k) x.slice(k).setOnes();
    return x;
}

// Builds the operator and noise-free solution described by the config.
std::pair<Tensor3, Tensor3> build_problem(const Config& cfg) {
    const std::string problem = cfg.str("problem", "baart-prolate");
    const Index p = cfg.integer("p", 1);
    Tensor3 a;
    if (problem == "baart-prolate") {
        const std::string fixture = cfg.str("fixture", "fixtures/baart100.t3d1");
        const Eigen::MatrixXd inner = load_matrix_fixture(fixture);
        const Index n = inner.rows();
        a = prolate_slices(n, cfg.num("w", 0.46), inner);
    } else if (problem == "blur" || problem == "blur-sym") {
        BlurSpec spec;
        spec.n_size = cfg.integer("n", 64);
        spec.sigma = cfg.num("sigma", 3.0);
        spec.band = cfg.integer("band", 9);
        if (problem == "blur") {
            a = blur_tensor(spec);
        } else if (cfg.has("tube-sigma") || cfg.has("tube-band")) {
            // Decoupled symmetric operator: separate (typically milder) tube
            // kernel so the cross-slice coupling stays well conditioned.
            BlurSpec tube{spec.n_size, cfg.num("tube-sigma", 0.7),
                          cfg.integer("tube-band", 5)};
            a = blur_tensor_symmetric(spec, tube);
        } else {
            a = blur_tensor_symmetric(spec);
        }
    } else if (problem == "files") {
        a = load_t3d1(cfg.str("a"));
        return {a, load_t3d1(cfg.str("xtrue"))};
    } else {
        throw CLI::ValidationError("problem", "unknown problem tag " + problem);
    }
    Tensor3 x_true = cfg.has("image") ? image_to_tensor(cfg.str("image"))
                                      : ones_solution(a.cols(), p, a.tubes());
    return {a, x_true};
}

struct Cell {
    SolveReport report;
    double noise_level = 0.0;
    std::string status;
};

Cell run_cell(const Config& cfg, const std::string& method, double level, uint64_t instance_seed) {
    const auto [a, x_true] = build_problem(cfg);
    NoiseSpec noise{level, instance_seed};
    ProblemInstance inst = make_instance(a, x_true, noise, cfg.str("problem", "baart-prolate"));

    const double tau = cfg.num("tau", inst.b.cols() > 1 ? 1.2 : 1.1);
    DiscrepancyConfig disc{inst.delta, tau, static_cast<Index>(cfg.integer("kmax", 0))};
    TikhonovConfig tik;
    tik.mu_lo = cfg.num("mu_lo", tik.mu_lo);
    tik.mu_hi = cfg.num("mu_hi", tik.mu_hi);
    const uint64_t seed = static_cast<uint64_t>(cfg.integer("seed", 0));
    const Index kmax = disc.k_max;

    Cell cell;
    cell.noise_level = level;
    try {
        if (method == "ttsvd") {
            cell.report = solve_ttsvd(inst.a, inst.b, disc);
        } else if (method == "ttevd") {
            cell.report = solve_ttevd(inst.a, inst.b, disc);
        } else if (method == "rtsvd") {
            RtsvdConfig rc;
            rc.epsilon = cfg.num("eps", 1e-2 * fro_norm(inst.a));
            rc.oversample = static_cast<int>(cfg.integer("rho", rc.oversample));
            rc.seed = seed;
            cell.report = solve_rtsvd(inst.a, inst.b, disc, rc);
        } else if (method == "nested-tgkb_p") {
            cell.report = solve_nested_tgkb_p(inst.a, inst.b, inst.deltas, tau, kmax,
                                              cfg.integer("kinit", 2), seed);
        } else {
            const std::map<std::string, SliceMethod> tags = {
                {"tgkb", SliceMethod::tgkb},
                {"tgkb-triplet", SliceMethod::tgkb_triplet},
                {"tlanczos", SliceMethod::tlanczos},
                {"tlanczos-eig", SliceMethod::tlanczos_eig},
                {"tgkt", SliceMethod::tgkt},
                {"tlanczos-tik", SliceMethod::tlanczos_tik},
            };
            auto it = tags.find(method);
            if (it == tags.end())
                throw CLI::ValidationError("method", "unknown method tag " + method);
            if (inst.b.cols() == 1) {
                DiscrepancyConfig d1{inst.deltas[0], tau, kmax};
                switch (it->second) {
                    case SliceMethod::tgkb: cell.report = solve_tgkb(inst.a, inst.b, d1, seed); break;
                    case SliceMethod::tgkb_triplet:
                        cell.report = solve_tgkb_triplet_form(inst.a, inst.b, d1, seed);
                        break;
                    case SliceMethod::tlanczos:
                        cell.report = solve_tlanczos(inst.a, inst.b, d1, seed);
                        break;
                    case SliceMethod::tlanczos_eig:
                        cell.report = solve_tlanczos_eig_form(inst.a, inst.b, d1, seed);
                        break;
                    case SliceMethod::tgkt:
                        cell.report =
                            solve_tikhonov_projected(inst.a, inst.b, d1, tik, KrylovKind::tgkb, seed);
                        break;
                    case SliceMethod::tlanczos_tik:
                        cell.report = solve_tikhonov_projected(inst.a, inst.b, d1, tik,
                                                               KrylovKind::tlanczos, seed);
                        break;
                }
            } else {
                cell.report = solve_p(inst.a, inst.b, inst.deltas, it->second, tau, kmax, seed, tik);
            }
        }
        cell.report.relative_error = relative_error(cell.report.x, inst.x_true);
        if (!cell.report.success) cell.status = "failed";
    } catch (const CLI::Error&) {
        throw;
    } catch (const std::exception& e) {
        cell.status = "failed";
        cell.report.method_tag = method;
        cell.report.diagnostics = e.what();
    }
    if (!cell.status.empty() && !cell.report.diagnostics.empty())
        std::cerr << "[" << method << " @ " << level << "] " << cell.report.diagnostics << "\n";
    return cell;
}

void write_csv(const std::string& path, const std::vector<std::string>& rows,
               const std::string& header) {
    std::ostream* out = &std::cout;
    std::ofstream file;
    if (!path.empty() && path != "-") {
        file.open(path);
        if (!file) throw CLI::ValidationError("out", "cannot write " + path);
        out = &file;
    }
    *out << header << "\n";
    for (const auto& r : rows) *out << r << "\n";
}

std::vector<double> parse_levels(const Config& cfg) {
    std::vector<double> levels;
    for (const auto& s : cfg.list("levels")) levels.push_back(std::stod(s));
    if (levels.empty()) levels.push_back(cfg.num("level", 1e-2));
    return levels;
}

int cmd_gen(const Config& cfg) {
    const auto [a, x_true] = build_problem(cfg);
    NoiseSpec noise{cfg.num("level", 1e-2), static_cast<uint64_t>(cfg.integer("seed", 0))};
    ProblemInstance inst = make_instance(a, x_true, noise, cfg.str("problem", "baart-prolate"));

    const std::filesystem::path dir = cfg.str("out", ".");
    std::filesystem::create_directories(dir);
    save_t3d1(inst.a, (dir / "a.t3d1").string());
    save_t3d1(inst.b, (dir / "b.t3d1").string());
    save_t3d1(inst.b_true, (dir / "btrue.t3d1").string());
    save_t3d1(inst.x_true, (dir / "xtrue.t3d1").string());
    std::ofstream meta(dir / "meta.txt");
    meta << "provenance=" << inst.provenance << "\ndelta=" << inst.delta << "\ndeltas=";
    for (size_t j = 0; j < inst.deltas.size(); ++j) meta << (j ? "," : "") << inst.deltas[j];
    meta << "\n";
    std::cout << "wrote instance to " << dir.string() << " (" << inst.provenance << ")\n";
    return 0;
}

int cmd_run(const Config& cfg, const std::vector<std::string>& methods) {
    const std::vector<double> levels = parse_levels(cfg);
    const uint64_t seed = static_cast<uint64_t>(cfg.integer("seed", 0));
    std::vector<std::string> rows;
    bool all_ok = true;
    for (const std::string& method : methods) {
        for (size_t li = 0; li < levels.size(); ++li) {
            const uint64_t instance_seed = seed + static_cast<uint64_t>(li) * kLevelSeedStride;
            Cell cell = run_cell(cfg, method, levels[li], instance_seed);
            rows.push_back(report_csv_row(cell.report, cell.noise_level, cell.status));
            all_ok = all_ok && cell.status.empty();
        }
    }
    write_csv(cfg.str("out"), rows, report_csv_header() + ",status");
    return all_ok ? 0 : 1;
}

int cmd_sweep_eps(const Config& cfg) {
    std::vector<double> grid;
    for (const auto& s : cfg.list("eps_grid")) grid.push_back(std::stod(s));
    if (grid.empty()) throw CLI::ValidationError("eps-grid", "empty epsilon grid");

    const auto [a, x_true] = build_problem(cfg);
    const uint64_t seed = static_cast<uint64_t>(cfg.integer("seed", 0));
    NoiseSpec noise{cfg.num("level", 1e-2), seed};
    ProblemInstance inst = make_instance(a, x_true, noise, cfg.str("problem", "baart-prolate"));
    DiscrepancyConfig disc{inst.delta, cfg.num("tau", 1.1),
                           static_cast<Index>(cfg.integer("kmax", 0))};

    std::vector<std::string> rows;
    bool all_ok = true;
    for (double eps : grid) {
        RtsvdConfig rc;
        rc.epsilon = eps;
        rc.oversample = static_cast<int>(cfg.integer("rho", rc.oversample));
        rc.seed = seed;
        std::ostringstream row;
        try {
            SolveReport rep = solve_rtsvd(inst.a, inst.b, disc, rc);
            RtsvdResult rr = rtsvd(inst.a, rc);
            rep.relative_error = relative_error(rep.x, inst.x_true);
            row << eps << ',' << rr.r << ',' << rep.k_scalar() << ',' << rep.relative_error << ','
                << (rep.success ? "" : "failed");
            all_ok = all_ok && rep.success;
        } catch (const std::exception& e) {
            row << eps << ",0,0,," << "failed";
            std::cerr << "[eps " << eps << "] " << e.what() << "\n";
            all_ok = false;
        }
        rows.push_back(row.str());
    }
    write_csv(cfg.str("out"), rows, "epsilon,r,k,relative_error,status");
    return all_ok ? 0 : 1;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"t-product regularization toolbox"};
    app.require_subcommand(1);

    Config cfg;
    std::string config_path, method;
    std::vector<std::string> overrides;

    auto add_common = [&](CLI::App* sub) {
        sub->add_option("--config", config_path, "flat key=value config file");
        sub->add_option("--set", overrides, "override key=value")->take_all();
        sub->add_option("--seed", cfg.kv["seed"], "RNG seed");
        sub->add_option("--out", cfg.kv["out"], "output path (CSV or directory)");
        sub->add_option("--problem", cfg.kv["problem"], "baart-prolate | blur | blur-sym | files");
        sub->add_option("--fixture", cfg.kv["fixture"], "matrix fixture path (baart-prolate)");
        sub->add_option("--image", cfg.kv["image"], "graymap/pixmap for x_true");
        sub->add_option("--n", cfg.kv["n"], "problem order");
        sub->add_option("--sigma", cfg.kv["sigma"], "blur sigma");
        sub->add_option("--band", cfg.kv["band"], "blur bandwidth");
        sub->add_option("--level", cfg.kv["level"], "noise level");
        sub->add_option("--delta", cfg.kv["delta"], "noise norm override");
        sub->add_option("--tau", cfg.kv["tau"], "discrepancy constant");
        sub->add_option("--kmax", cfg.kv["kmax"], "iteration cap");
        sub->add_option("--eps", cfg.kv["eps"], "rtsvd epsilon");
        sub->add_option("--rho", cfg.kv["rho"], "rtsvd oversampling");
    };

    CLI::App* gen = app.add_subcommand("gen", "build and save a test problem");
    add_common(gen);

    CLI::App* solve = app.add_subcommand("solve", "run one method");
    add_common(solve);
    solve->add_option("--method", method, "method tag")->required();

    CLI::App* bench = app.add_subcommand("bench", "run a method x noise-level grid");
    add_common(bench);
    bench->add_option("--method", cfg.kv["methods"], "comma-separated method tags");
    bench->add_option("--levels", cfg.kv["levels"], "comma-separated noise levels");

    CLI::App* sweep = app.add_subcommand("sweep-eps", "rtsvd epsilon sweep");
    add_common(sweep);
    sweep->add_option("--eps-grid", cfg.kv["eps_grid"], "comma-separated epsilon values");

    CLI11_PARSE(app, argc, argv);

    try {
        // Empty strings left by unused --set slots must not shadow config values.
        for (auto it = cfg.kv.begin(); it != cfg.kv.end();) {
            if (it->second.empty())
                it = cfg.kv.erase(it);
            else
                ++it;
        }
        if (!config_path.empty()) {
            Config file_cfg;
            file_cfg.load(config_path);
            for (auto& [k, v] : cfg.kv) file_cfg.kv[k] = v;  // flags win
            cfg.kv.swap(file_cfg.kv);
        }
        for (const std::string& ov : overrides) {
            const auto eq = ov.find('=');
            if (eq == std::string::npos)
                throw CLI::ValidationError("--set", "expected key=value, got " + ov);
            cfg.kv[ov.substr(0, eq)] = ov.substr(eq + 1);
        }

        if (gen->parsed()) return cmd_gen(cfg);
        if (solve->parsed()) return cmd_run(cfg, {method});
        if (bench->parsed()) {
            std::vector<std::string> methods = cfg.list("methods");
            return cmd_run(cfg, methods);
        }
        if (sweep->parsed()) return cmd_sweep_eps(cfg);
    } catch (const CLI::Error& e) {
        return app.exit(e);
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 1;
    }
    return 0;
}
