// Experiment driver: builds a refinement scenario on the unit cube, assembles
// the P1 system, solves with a chosen multilevel preconditioner, runs the
// verification suite, and emits VTK meshes plus JSON/CSV reports.
//
// Exit codes: 0 ok, 2 bad configuration, 3 solver failure, 4 verification
// failure, 5 i/o failure.

#include <filesystem>
#include <fstream>
#include <iostream>
#include <sstream>

#include <CLI11.hpp>

#include "tetml/io.hpp"
#include "tetml/precond.hpp"
#include "tetml/solver.hpp"
#include "tetml/verify.hpp"

namespace fs = std::filesystem;
using namespace tetml;

namespace {

constexpr int kExitOk = 0;
constexpr int kExitConfig = 2;
constexpr int kExitSolver = 3;
constexpr int kExitVerify = 4;
constexpr int kExitIo = 5;

struct Options {
    std::string scenario = "uniform";
    int J = 2;
    std::string precond = "bpx";
    double gamma = 0.0;
    double tol = 1e-10;
    int maxit = 1000;
    uint64_t seed = 2026;
    std::string out = "out";
    std::string bff = "scaled";        // scaled | jacobi
    std::string mesh_file;             // optional explicit initial mesh
    std::string dump_matrix;           // optional MatrixMarket dump of A
    std::vector<std::string> preconds; // compare verb
    std::vector<double> gammas;        // compare verb
};

PrecondKind parse_precond(const std::string& s) {
    if (s == "hb") return PrecondKind::HB;
    if (s == "bpx") return PrecondKind::BPX;
    if (s == "whb") return PrecondKind::WHB;
    throw ConfigError("unknown preconditioner '" + s + "'");
}

std::string precond_name(PrecondKind k) {
    switch (k) {
        case PrecondKind::HB: return "hb";
        case PrecondKind::BPX: return "bpx";
        default: return "whb";
    }
}

Hierarchy build_hierarchy(const Options& o) {
    if (!o.mesh_file.empty()) {
        std::ifstream in(o.mesh_file);
        if (!in) throw IOFailure("cannot open mesh file " + o.mesh_file);
        Hierarchy h = build_from_stream(in);
        Scenario s = parse_scenario(o.scenario);
        for (int j = 0; j < o.J; ++j)
            refine_level(h, mark_closure(h, j, marker(h, scenario_strategy(s, j), j)));
        return h;
    }
    return build_scenario(parse_scenario(o.scenario), o.J);
}

void write_file(const fs::path& p, const std::string& content) {
    std::ofstream os(p, std::ios::binary);
    if (!os) throw IOFailure("cannot open " + p.string() + " for writing");
    os << content;
    if (!os) throw IOFailure("write failed for " + p.string());
}

void export_levels(const Hierarchy& h, const fs::path& dir, const std::string& stem) {
    for (int j = 0; j <= h.max_level(); ++j) {
        std::ostringstream os;
        write_vtk(h, j, os);
        write_file(dir / (stem + "_level" + std::to_string(j) + ".vtk"), os.str());
    }
}

struct SolveOutcome {
    SolveReport report;
    int dof = 0;
};

SolveOutcome solve_once(const TransferChain& chain, PrecondKind kind, double gamma,
                        BffMode bff, double tol, int maxit) {
    int J = chain.finest();
    PrecondConfig cfg;
    cfg.kind = kind;
    cfg.gamma = gamma;
    cfg.bff = bff;
    Preconditioner pc(chain, cfg);
    auto [x, rep] = pcg(chain.sys[(size_t)J].A, chain.sys[(size_t)J].F, pc.as_operator(),
                        tol, maxit);
    return {rep, chain.sys[(size_t)J].A.n};
}

ordered_json solve_json(const Options& o, const SolveOutcome& s) {
    ordered_json j;
    j["scenario"] = o.scenario;
    j["J"] = o.J;
    j["precond"] = o.precond;
    j["gamma"] = o.gamma;
    j["tol"] = o.tol;
    j["seed"] = o.seed;
    j["dof"] = s.dof;
    j["iterations"] = s.report.iterations;
    j["converged"] = s.report.converged;
    j["relative_residual"] = s.report.relative_residual;
    j["true_relative_residual"] = s.report.true_relative_residual;
    j["lambda_min"] = s.report.lambda_min;
    j["lambda_max"] = s.report.lambda_max;
    j["kappa"] = s.report.kappa;
    return j;
}

int cmd_run(const Options& o) {
    Hierarchy h = build_hierarchy(o);
    TransferChain chain =
        build_transfer(h, Coefficients::poisson([](const Vec3&) { return 1.0; }));

    fs::create_directories(o.out);
    export_levels(h, o.out, "mesh");

    if (!o.dump_matrix.empty()) {
        std::ostringstream os;
        chain.sys[(size_t)chain.finest()].A.write_matrix_market(os);
        write_file(o.dump_matrix, os.str());
    }

    SolveOutcome s = solve_once(chain, parse_precond(o.precond), o.gamma,
                                o.bff == "jacobi" ? BffMode::Jacobi : BffMode::ScaledIdentity,
                                o.tol, o.maxit);
    write_file(fs::path(o.out) / "solve.json", solve_json(o, s).dump(2) + "\n");

    VerifyOptions vo;
    vo.seed = o.seed;
    VerifyReport rep = run_verification(h, &chain, vo);
    write_file(fs::path(o.out) / "verify.json", rep.to_json().dump(2) + "\n");
    rep.print_table(std::cout);
    std::cout << "dof " << s.dof << "  iterations " << s.report.iterations << "  kappa "
              << s.report.kappa << "\n";

    if (!s.report.converged) {
        std::cerr << "solver did not converge\n";
        return kExitSolver;
    }
    if (!rep.all_pass()) return kExitVerify;
    return kExitOk;
}

int cmd_verify(const Options& o) {
    Hierarchy h = build_hierarchy(o);
    TransferChain chain = build_transfer(h, Coefficients::h1());
    VerifyOptions vo;
    vo.seed = o.seed;
    VerifyReport rep = run_verification(h, &chain, vo);
    rep.print_table(std::cout);
    if (!o.out.empty()) {
        fs::create_directories(o.out);
        write_file(fs::path(o.out) / "verify.json", rep.to_json().dump(2) + "\n");
    }
    return rep.all_pass() ? kExitOk : kExitVerify;
}

int cmd_compare(const Options& o) {
    std::vector<std::pair<PrecondKind, double>> configs;
    std::vector<double> gammas = o.gammas.empty() ? std::vector<double>{o.gamma} : o.gammas;
    for (const auto& p : o.preconds) {
        PrecondKind k = parse_precond(p);
        if (k == PrecondKind::WHB)
            for (double g : gammas) configs.emplace_back(k, g);
        else
            configs.emplace_back(k, 0.0);
    }
    if (configs.size() < 2)
        throw MismatchedScenario("compare needs at least two configurations");

    Hierarchy h = build_hierarchy(o);
    TransferChain chain =
        build_transfer(h, Coefficients::poisson([](const Vec3&) { return 1.0; }));

    std::ostringstream csv;
    csv << "J,N_J,precond,gamma,iterations,lambda_min,lambda_max,kappa\n";
    char buf[256];
    for (int J = 1; J <= o.J; ++J) {
        // sub-hierarchy identical to a fresh build at level J
        Hierarchy hj = build_scenario(parse_scenario(o.scenario), J);
        TransferChain cj =
            build_transfer(hj, Coefficients::poisson([](const Vec3&) { return 1.0; }));
        for (auto [kind, g] : configs) {
            SolveOutcome s = solve_once(cj, kind, g, BffMode::ScaledIdentity, o.tol, o.maxit);
            if (!s.report.converged) {
                std::cerr << "solver stalled at J=" << J << " precond "
                          << precond_name(kind) << "\n";
                return kExitSolver;
            }
            std::snprintf(buf, sizeof buf, "%d,%d,%s,%.17g,%d,%.17g,%.17g,%.17g\n", J,
                          s.dof, precond_name(kind).c_str(), g, s.report.iterations,
                          s.report.lambda_min, s.report.lambda_max, s.report.kappa);
            csv << buf;
        }
    }
    fs::create_directories(o.out);
    write_file(fs::path(o.out) / "compare.csv", csv.str());
    std::cout << csv.str();
    return kExitOk;
}

int cmd_export(const Options& o) {
    Hierarchy h = build_hierarchy(o);
    fs::create_directories(o.out);
    export_levels(h, o.out, "mesh");
    std::cout << "wrote " << h.max_level() + 1 << " level meshes to " << o.out << "\n";
    return kExitOk;
}

void add_common(CLI::App* cmd, Options& o, std::string& config_path) {
    cmd->add_option("--scenario", o.scenario, "uniform | corner | ball");
    cmd->add_option("--J", o.J, "number of refinement levels")->check(CLI::NonNegativeNumber);
    cmd->add_option("--gamma", o.gamma, "inner-solve slack in [0,1)");
    cmd->add_option("--tol", o.tol, "solver relative tolerance");
    cmd->add_option("--maxit", o.maxit, "solver iteration cap");
    cmd->add_option("--seed", o.seed, "RNG seed recorded in all outputs");
    cmd->add_option("--out", o.out, "output directory");
    cmd->add_option("--mesh", o.mesh_file, "explicit initial mesh file (header 'V T')");
    cmd->add_option("--config", config_path,
                    "flat key-value config file; command-line flags win");
}

// Flat "key value" or "key=value" lines; '#' starts a comment. Values apply
// only where the corresponding flag was not given on the command line.
void apply_config(const std::string& path, CLI::App* cmd, Options& o) {
    std::ifstream in(path);
    if (!in) throw ConfigParse("cannot open config file " + path);
    auto keep_cli = [&](const char* flag) {
        const CLI::Option* opt = cmd->get_option_no_throw(flag);
        return opt != nullptr && opt->count() > 0;
    };
    std::string line;
    int lineno = 0;
    while (std::getline(in, line)) {
        ++lineno;
        if (auto hash = line.find('#'); hash != std::string::npos) line.erase(hash);
        for (char& ch : line)
            if (ch == '=') ch = ' ';
        std::istringstream ls(line);
        std::string key, value;
        if (!(ls >> key)) continue;
        if (!(ls >> value))
            throw ConfigParse(path + ":" + std::to_string(lineno) + ": missing value for '" +
                              key + "'");
        try {
            if (key == "scenario") {
                if (!keep_cli("--scenario")) o.scenario = value;
            } else if (key == "J") {
                if (!keep_cli("--J")) o.J = std::stoi(value);
            } else if (key == "precond") {
                if (!keep_cli("--precond")) o.precond = value;
            } else if (key == "gamma") {
                if (!keep_cli("--gamma")) o.gamma = std::stod(value);
            } else if (key == "tol") {
                if (!keep_cli("--tol")) o.tol = std::stod(value);
            } else if (key == "maxit") {
                if (!keep_cli("--maxit")) o.maxit = std::stoi(value);
            } else if (key == "seed") {
                if (!keep_cli("--seed")) o.seed = std::stoull(value);
            } else if (key == "out") {
                if (!keep_cli("--out")) o.out = value;
            } else if (key == "bff") {
                if (!keep_cli("--bff")) o.bff = value;
            } else if (key == "mesh") {
                if (!keep_cli("--mesh")) o.mesh_file = value;
            } else {
                throw ConfigParse(path + ":" + std::to_string(lineno) + ": unknown key '" +
                                  key + "'");
            }
        } catch (const std::invalid_argument&) {
            throw ConfigParse(path + ":" + std::to_string(lineno) + ": bad value '" + value +
                              "' for '" + key + "'");
        } catch (const std::out_of_range&) {
            throw ConfigParse(path + ":" + std::to_string(lineno) + ": bad value '" + value +
                              "' for '" + key + "'");
        }
    }
}

} // namespace

int main(int argc, char** argv) {
    CLI::App app{"multilevel tetrahedral refinement and preconditioning driver"};
    app.require_subcommand(1);
    Options o;
    std::string config_path;

    CLI::App* run = app.add_subcommand("run", "refine, solve, verify, export");
    add_common(run, o, config_path);
    run->add_option("--precond", o.precond, "hb | bpx | whb");
    run->add_option("--bff", o.bff, "whb fine-block scaling: scaled | jacobi");
    run->add_option("--dump-matrix", o.dump_matrix, "MatrixMarket dump of the finest matrix");

    CLI::App* verify = app.add_subcommand("verify", "run the verification suite only");
    add_common(verify, o, config_path);

    CLI::App* compare = app.add_subcommand("compare", "condition-number table for J=1..J");
    add_common(compare, o, config_path);
    compare->add_option("--precond", o.preconds, "preconditioners to compare")
        ->delimiter(',');
    compare->add_option("--gammas", o.gammas, "slack values for whb")->delimiter(',');

    CLI::App* exp = app.add_subcommand("export-mesh", "write per-level VTK meshes");
    add_common(exp, o, config_path);

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        int rc = app.exit(e);
        return rc == 0 ? kExitOk : kExitConfig;
    }

    try {
        if (!config_path.empty())
            apply_config(config_path, app.get_subcommands().front(), o);
        if (o.gamma < 0 || o.gamma >= 1) throw ConfigError("gamma must be in [0,1)");
        if (run->parsed()) return cmd_run(o);
        if (verify->parsed()) return cmd_verify(o);
        if (compare->parsed()) return cmd_compare(o);
        if (exp->parsed()) return cmd_export(o);
    } catch (const ConfigError& e) {
        std::cerr << "configuration error: " << e.what() << "\n";
        return kExitConfig;
    } catch (const ConfigParse& e) {
        std::cerr << "configuration error: " << e.what() << "\n";
        return kExitConfig;
    } catch (const MismatchedScenario& e) {
        std::cerr << "configuration error: " << e.what() << "\n";
        return kExitConfig;
    } catch (const IOFailure& e) {
        std::cerr << "i/o error: " << e.what() << "\n";
        return kExitIo;
    } catch (const SolverStall& e) {
        std::cerr << "solver error: " << e.what() << "\n";
        return kExitSolver;
    } catch (const BreakdownNegativeCurvature& e) {
        std::cerr << "solver error: " << e.what() << "\n";
        return kExitSolver;
    } catch (const Error& e) {
        std::cerr << "error: " << e.what() << "\n";
        return kExitConfig;
    }
    return kExitConfig;
}
