#include "cli.hpp"

#include <algorithm>
#include <atomic>
#include <cctype>
#include <cmath>
#include <filesystem>
#include <map>
#include <mutex>
#include <numbers>
#include <optional>
#include <ostream>
#include <thread>

#include <fmt/format.h>

#include "CLI11.hpp"
#include "kaczmarz/analysis.hpp"
#include "kaczmarz/bounds.hpp"
#include "kaczmarz/errors.hpp"
#include "kaczmarz/io.hpp"
#include "kaczmarz/problems.hpp"
#include "kaczmarz/solvers.hpp"

namespace kaczmarz::cli {

namespace fs = std::filesystem;

namespace {

class ConfigError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

struct CommonOptions {
    std::uint64_t seed = 1;
    std::string out = "out";
    unsigned jobs = 1;
};

struct GenerateOptions {
    std::string kind = "gaussian";
    std::size_t m = 200;
    std::size_t n = 100;
    std::size_t grid = 10;
    std::size_t angles = 12;
    std::size_t detectors = 20;
    double source_radius = 0.0; // 0 → 2·grid
    double noise = 0.0;
    bool normalize = false;
    std::string file = "system.json";
};

struct SolveOptions {
    std::string system;
    std::vector<std::string> solvers{"k", "rk", "rkha"};
    std::size_t trials = 1;
    std::size_t cycles = 10;
    std::size_t max_steps = 0;
    double residual_tol = 1e-10;
    double error_tol = 0.0;
    bool timing = false;
};

struct BoundsOptions {
    std::string system;
    std::vector<std::string> kinds{"all"};
    std::size_t block_size = 1;
    std::size_t steps = 0;
    std::size_t cycles = 10;
};

struct AnalyzeOptions {
    std::string system;
    double bin_width = 1.0;
};

enum class SolverKind { single, rkha, rkha_literal, block, rkos, rkos_qr };

struct SolverSpec {
    std::string tag;
    SolverKind kind = SolverKind::single;
    samplers::SamplerPolicy policy;
    std::size_t p = 1;
};

std::string lower(std::string s) {
    std::transform(s.begin(), s.end(), s.begin(), [](unsigned char c) { return std::tolower(c); });
    return s;
}

std::size_t parse_count(const std::string& text, const std::string& what) {
    try {
        std::size_t used = 0;
        const unsigned long long v = std::stoull(text, &used);
        if (used != text.size()) throw std::invalid_argument(text);
        return static_cast<std::size_t>(v);
    } catch (const std::exception&) {
        throw ConfigError("invalid " + what + " '" + text + "'");
    }
}

SolverSpec parse_solver(const std::string& raw) {
    const auto colon = raw.find(':');
    const std::string head = lower(raw.substr(0, colon));
    const std::string arg = colon == std::string::npos ? "" : raw.substr(colon + 1);
    SolverSpec s;
    s.tag = head;
    if (head == "weights") {
        try {
            s.policy = samplers::parse_policy("weights:" + arg);
        } catch (const InvalidArgument& e) {
            throw ConfigError(e.what());
        }
        return s;
    }
    if (!arg.empty() && head != "block" && head != "rkos" && head != "rkos_qr") {
        throw ConfigError("solver '" + raw + "' takes no parameter");
    }
    if (head == "k" || head == "cyclic") {
        s.policy = samplers::SamplerPolicy::cyclic();
        s.tag = "k";
    } else if (head == "rk" || head == "norm2") {
        s.policy = samplers::SamplerPolicy::norm_squared();
        s.tag = "rk";
    } else if (head == "uniform") {
        s.policy = samplers::SamplerPolicy::uniform();
    } else if (head == "angle") {
        s.policy = samplers::SamplerPolicy::angle_pair();
    } else if (head == "rkha") {
        s.kind = SolverKind::rkha;
    } else if (head == "rkha_literal") {
        s.kind = SolverKind::rkha_literal;
    } else if (head == "block" || head == "rkos" || head == "rkos_qr") {
        s.kind = head == "block" ? SolverKind::block : head == "rkos" ? SolverKind::rkos : SolverKind::rkos_qr;
        s.p = arg.empty() ? 1 : parse_count(arg, "block size");
        if (s.p == 0) throw ConfigError("block size must be positive");
        s.tag = head + "-" + std::to_string(s.p);
    } else {
        throw ConfigError("unknown solver '" + raw + "'");
    }
    return s;
}

void check_solver_fits(const SolverSpec& s, const problems::LinearSystem& sys) {
    if (s.kind == SolverKind::block && s.p > sys.m()) {
        throw ConfigError("block size " + std::to_string(s.p) + " exceeds row count");
    }
    if ((s.kind == SolverKind::rkos || s.kind == SolverKind::rkos_qr) && s.p > std::min(sys.m(), sys.n())) {
        throw ConfigError("RKOS block size " + std::to_string(s.p) + " exceeds min(M, N)");
    }
    if (s.policy.kind == samplers::PolicyKind::custom_weights && s.policy.weights.size() != sys.m()) {
        throw ConfigError("custom weights hold " + std::to_string(s.policy.weights.size()) + " entries, system has " +
                          std::to_string(sys.m()) + " rows");
    }
}

solvers::IterationTrace run_solver(const SolverSpec& s, const problems::LinearSystem& sys,
                                   const solvers::StopRule& stop, std::uint64_t seed) {
    Rng rng(seed);
    solvers::SolverOptions opts;
    switch (s.kind) {
    case SolverKind::single: return solvers::run_kaczmarz(sys, s.policy, stop, rng, opts);
    case SolverKind::rkha: return solvers::run_rkha(sys, stop, rng, opts);
    case SolverKind::rkha_literal:
        opts.rkha_literal = true;
        return solvers::run_rkha(sys, stop, rng, opts);
    case SolverKind::block:
        return solvers::run_block_kaczmarz(sys, samplers::contiguous_partition(sys.m(), s.p), stop, opts);
    case SolverKind::rkos: return solvers::run_rkos(sys, s.p, stop, rng, solvers::RkosVariant::gram_schmidt, opts);
    case SolverKind::rkos_qr: return solvers::run_rkos(sys, s.p, stop, rng, solvers::RkosVariant::qr, opts);
    }
    throw ConfigError("unhandled solver");
}

double median(std::vector<double> v) {
    if (v.empty()) return std::numeric_limits<double>::quiet_NaN();
    std::sort(v.begin(), v.end());
    const std::size_t mid = v.size() / 2;
    return v.size() % 2 == 1 ? v[mid] : 0.5 * (v[mid - 1] + v[mid]);
}

/// Error of the last record at or before `step`.
double error_at(const solvers::IterationTrace& t, std::size_t step) {
    auto it = std::upper_bound(t.records.begin(), t.records.end(), step,
                               [](std::size_t s, const solvers::TraceRecord& r) { return s < r.step; });
    return it == t.records.begin() ? std::numeric_limits<double>::quiet_NaN() : std::prev(it)->error;
}

void print_coherence(std::ostream& out, const analysis::CoherenceReport& r) {
    out << fmt::format("M={} N={} coherence={} mean_G={} median_G={} welch_paper={} welch_sqrt={}\n", r.m, r.n,
                       io::format_double(r.mutual_coherence), io::format_double(r.mean_gram),
                       io::format_double(r.median_gram), io::format_double(r.welch_paper),
                       io::format_double(r.welch_sqrt));
}

problems::LinearSystem load_system(const std::string& path) {
    if (path.empty()) throw ConfigError("--system is required");
    problems::LinearSystem sys = io::read_system(path);
    try {
        sys.validate();
    } catch (const InvalidArgument& e) {
        throw IoError(path + ": " + e.what());
    }
    return sys;
}

int cmd_generate(const CommonOptions& common, const GenerateOptions& g, std::ostream& out) {
    problems::LinearSystem sys;
    const problems::SystemKind kind = [&] {
        try {
            return problems::parse_system_kind(lower(g.kind));
        } catch (const InvalidArgument& e) {
            throw ConfigError(e.what());
        }
    }();
    if (!(g.noise >= 0.0)) throw ConfigError("--noise must be non-negative");
    try {
        switch (kind) {
        case problems::SystemKind::gaussian: sys = problems::gen_gaussian_system(g.m, g.n, common.seed); break;
        case problems::SystemKind::parallel_beam:
            sys = problems::gen_parallel_beam(problems::shepp_logan(g.grid), g.angles, g.detectors);
            break;
        case problems::SystemKind::fan_beam:
            sys = problems::gen_fan_beam(problems::shepp_logan(g.grid), g.angles, g.detectors,
                                         g.source_radius > 0 ? g.source_radius : 2.0 * static_cast<double>(g.grid));
            break;
        case problems::SystemKind::custom: throw ConfigError("cannot generate a custom system");
        }
    } catch (const InvalidArgument& e) {
        throw ConfigError(e.what());
    }
    if (g.noise > 0.0) sys = problems::add_noise(std::move(sys), g.noise, split_seed(common.seed, 0, 1));
    if (g.normalize) sys = problems::normalize_rows(std::move(sys));

    const fs::path path = fs::path(common.out) / g.file;
    io::write_system(path, sys);
    out << "wrote " << path.string() << "\n";
    print_coherence(out, analysis::coherence_report(sys.a));
    return ok;
}

int cmd_solve(const CommonOptions& common, const SolveOptions& o, std::ostream& out, std::ostream& err) {
    if (o.trials < 1) throw ConfigError("--trials must be at least 1");
    if (o.solvers.empty()) throw ConfigError("no solvers given");
    if (common.jobs < 1) throw ConfigError("--jobs must be at least 1");
    std::vector<SolverSpec> specs;
    for (const auto& s : o.solvers) specs.push_back(parse_solver(s));
    const problems::LinearSystem sys = load_system(o.system);
    for (const auto& s : specs) check_solver_fits(s, sys);

    solvers::StopRule stop;
    stop.max_steps = o.max_steps > 0 ? o.max_steps : o.cycles * sys.m();
    stop.residual_tol = o.residual_tol;
    stop.error_tol = o.error_tol;

    struct Job {
        std::size_t solver;
        std::size_t trial;
        std::optional<solvers::IterationTrace> trace;
        std::string error;
    };
    std::vector<Job> jobs;
    for (std::size_t s = 0; s < specs.size(); ++s)
        for (std::size_t t = 0; t < o.trials; ++t) jobs.push_back({s, t, std::nullopt, {}});

    const fs::path dir(common.out);
    std::atomic<std::size_t> next{0};
    auto worker = [&] {
        for (std::size_t j = next++; j < jobs.size(); j = next++) {
            Job& job = jobs[j];
            const SolverSpec& spec = specs[job.solver];
            try {
                job.trace = run_solver(spec, sys, stop, split_seed(common.seed, job.trial, job.solver));
                io::write_text_file(dir / fmt::format("trace_{}_t{}.csv", spec.tag, job.trial),
                                    io::trace_csv(*job.trace, o.timing));
            } catch (const IoError& e) {
                job.error = std::string("io:") + e.what();
            } catch (const std::exception& e) {
                job.error = e.what();
            }
        }
    };
    const unsigned n_threads = std::min<std::size_t>(common.jobs, jobs.size());
    std::vector<std::thread> pool;
    for (unsigned i = 1; i < n_threads; ++i) pool.emplace_back(worker);
    worker();
    for (auto& th : pool) th.join();

    for (const Job& job : jobs) {
        if (job.error.empty()) continue;
        if (job.error.starts_with("io:")) throw IoError(job.error.substr(3));
        err << "solver " << specs[job.solver].tag << " (trial " << job.trial << ") failed: " << job.error << "\n";
        return numerical_error;
    }

    std::string agg = "solver,step,median_error\n";
    for (std::size_t s = 0; s < specs.size(); ++s) {
        std::vector<const solvers::IterationTrace*> traces;
        std::vector<std::size_t> steps;
        for (const Job& job : jobs) {
            if (job.solver != s) continue;
            traces.push_back(&*job.trace);
            for (const auto& r : job.trace->records) steps.push_back(r.step);
        }
        std::sort(steps.begin(), steps.end());
        steps.erase(std::unique(steps.begin(), steps.end()), steps.end());
        for (std::size_t step : steps) {
            std::vector<double> errs;
            for (const auto* t : traces) errs.push_back(error_at(*t, step));
            agg += fmt::format("{},{},{}\n", specs[s].tag, step, io::format_double(median(errs)));
        }
        std::vector<double> finals;
        for (const auto* t : traces) finals.push_back(t->last().error);
        out << fmt::format("{}: median final error {} over {} trial(s)\n", specs[s].tag,
                           io::format_double(median(finals)), traces.size());
    }
    io::write_text_file(dir / "aggregate.csv", agg);
    return ok;
}

int cmd_bounds(const CommonOptions& common, const BoundsOptions& o, std::ostream& out, std::ostream& err) {
    static const std::vector<std::string> known{"strohmer", "galantai", "ssw",  "ssw_smallest",
                                                "rkos",     "welch",    "compare"};
    std::vector<std::string> kinds;
    const bool all = std::find(o.kinds.begin(), o.kinds.end(), "all") != o.kinds.end();
    if (all) {
        kinds = known;
    } else {
        for (const auto& k : o.kinds) {
            if (std::find(known.begin(), known.end(), lower(k)) == known.end()) {
                throw ConfigError("unknown bound '" + k + "'");
            }
            kinds.push_back(lower(k));
        }
    }
    if (o.block_size < 1) throw ConfigError("--block-size must be positive");
    const problems::LinearSystem sys = load_system(o.system);
    const double z0_sq = sys.x_star ? std::pow(linalg::norm2(*sys.x_star), 2) : 1.0;
    const std::size_t steps = o.steps > 0 ? o.steps : 10 * sys.m();
    const fs::path dir(common.out);
    const auto partition = samplers::contiguous_partition(sys.m(), std::min(o.block_size, sys.m()));

    auto emit = [&](const bounds::BoundReport& r) {
        io::write_text_file(dir / ("bound_" + r.kind + ".csv"), io::bound_csv(r));
        io::write_text_file(dir / ("bound_" + r.kind + ".json"), io::bound_json(r).dump(2) + "\n");
        for (const auto& w : r.warnings) err << "warning: " << r.kind << ": " << w << "\n";
        out << fmt::format("{}: rate {}\n", r.kind, io::format_double(r.scalars.count("rate") ? r.scalars.at("rate") : 0.0));
    };

    for (const auto& k : kinds) {
        try {
            if (k == "strohmer") {
                emit(bounds::strohmer_bound(sys.a, z0_sq, steps));
            } else if (k == "galantai") {
                emit(bounds::galantai_bound(sys.a, partition, z0_sq, o.cycles));
            } else if (k == "ssw" || k == "ssw_smallest") {
                emit(bounds::ssw_bound(sys.a, partition, z0_sq, o.cycles,
                                       k == "ssw" ? bounds::AngleMode::friedrichs : bounds::AngleMode::smallest));
            } else if (k == "rkos") {
                if (o.block_size > sys.n()) throw InvalidArgument("block size exceeds N");
                emit(bounds::rkos_expected_decay(sys.n(), o.block_size, o.cycles));
            } else if (k == "welch") {
                const auto w = bounds::welch_bound(sys.m(), sys.n());
                nlohmann::json j{{"m", sys.m()}, {"n", sys.n()}, {"paper_form", w.paper_form}, {"sqrt_form", w.sqrt_form}};
                io::write_text_file(dir / "welch.json", j.dump(2) + "\n");
                out << fmt::format("welch: paper_form {} sqrt_form {}\n", io::format_double(w.paper_form),
                                   io::format_double(w.sqrt_form));
            } else if (k == "compare") {
                const auto cmp = bounds::compare_bounds(problems::normalize_rows(sys).a, o.cycles);
                std::string csv = "q,singular_value,determinant,determinant_tighter\n";
                for (std::size_t q = 0; q <= o.cycles; ++q) {
                    csv += fmt::format("{},{},{},{}\n", q, io::format_double(cmp.singular_value_form.envelope[q]),
                                       io::format_double(cmp.determinant_form.envelope[q]),
                                       cmp.determinant_tighter[q] ? 1 : 0);
                }
                io::write_text_file(dir / "compare.csv", csv);
                for (const auto& w : cmp.determinant_form.warnings) err << "warning: compare: " << w << "\n";
                out << fmt::format("compare: prod_sigma_sq {} det_aat {}\n", io::format_double(cmp.prod_sigma_sq),
                                   io::format_double(cmp.det_aat));
            }
        } catch (const IoError&) {
            throw;
        } catch (const Error& e) {
            if (all) {
                err << "skipped bound " << k << ": " << e.what() << "\n";
                continue;
            }
            err << "bound " << k << " failed: " << e.what() << "\n";
            return numerical_error;
        }
    }

    // measured traces for overlay, when the true solution is known
    if (sys.x_star) {
        solvers::StopRule stop;
        stop.residual_tol = 0.0;
        stop.max_steps = o.cycles * sys.m();
        try {
            const auto block = solvers::run_block_kaczmarz(sys, partition, stop);
            std::string csv = "t,envelope,kind\n";
            for (const auto& r : block.records) {
                if (r.block_step % partition.blocks.size() != 0) continue;
                csv += fmt::format("{},{},measured_block\n", r.block_step / partition.blocks.size(),
                                   io::format_double(r.error * r.error));
            }
            io::write_text_file(dir / "measured_block.csv", csv);
        } catch (const IoError&) {
            throw;
        } catch (const Error& e) {
            err << "skipped measured block trace: " << e.what() << "\n";
        }
        stop.max_steps = steps;
        Rng rng(split_seed(common.seed, 0, 0));
        const auto rk = solvers::run_kaczmarz(sys, samplers::SamplerPolicy::norm_squared(), stop, rng);
        std::string csv = "t,envelope,kind\n";
        for (const auto& r : rk.records) csv += fmt::format("{},{},measured_rk\n", r.step, io::format_double(r.error * r.error));
        io::write_text_file(dir / "measured_rk.csv", csv);
    }
    return ok;
}

int cmd_analyze(const CommonOptions& common, const AnalyzeOptions& o, std::ostream& out) {
    if (!(o.bin_width > 0.0) || o.bin_width > 180.0) throw ConfigError("--bin-width must lie in (0, 180]");
    const problems::LinearSystem sys = load_system(o.system);
    if (sys.m() < 2) throw ConfigError("analysis needs at least two rows");
    const linalg::DenseMatrix g = analysis::gramian(sys.a);
    analysis::CoherenceReport rep = analysis::coherence_report(sys.a);
    const fs::path dir(common.out);
    io::write_text_file(dir / "coherence.json", io::coherence_json(rep).dump(2) + "\n");
    io::write_text_file(dir / "histogram.csv", io::histogram_csv(analysis::angle_histogram(g, o.bin_width)));
    print_coherence(out, rep);
    return ok;
}

} // namespace

int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
    CLI::App app{"Kaczmarz-family solvers, convergence bounds and coherence diagnostics", "kaczmarz"};
    app.set_config("--config", "", "TOML/INI file; command-line flags take precedence");
    app.require_subcommand(1);
    app.fallthrough();

    CommonOptions common;
    app.add_option("--seed", common.seed, "Master seed")->capture_default_str();
    app.add_option("--out", common.out, "Output directory")->capture_default_str();
    app.add_option("--jobs", common.jobs, "Concurrent trials")->capture_default_str();

    GenerateOptions gen;
    auto* generate = app.add_subcommand("generate", "Write a linear system as JSON");
    generate->add_option("--kind", gen.kind, "gaussian | parallel | fan")->capture_default_str();
    generate->add_option("--m", gen.m, "Rows (gaussian)")->capture_default_str();
    generate->add_option("--n", gen.n, "Columns (gaussian)")->capture_default_str();
    generate->add_option("--grid", gen.grid, "Image side (beam systems)")->capture_default_str();
    generate->add_option("--angles", gen.angles, "Projection angles or source positions")->capture_default_str();
    generate->add_option("--detectors", gen.detectors, "Rays per angle")->capture_default_str();
    generate->add_option("--source-radius", gen.source_radius, "Fan source radius in pixels (default 2*grid)");
    generate->add_option("--noise", gen.noise, "Relative noise level added to b")->capture_default_str();
    generate->add_flag("--normalize", gen.normalize, "Scale rows to unit norm");
    generate->add_option("--file", gen.file, "File name inside --out")->capture_default_str();

    SolveOptions sol;
    auto* solve = app.add_subcommand("solve", "Run solvers over seeded trials");
    solve->add_option("--system", sol.system, "System JSON")->required();
    solve->add_option("--solvers", sol.solvers,
                      "k, rk, uniform, angle, weights:<file>, rkha, rkha_literal, block:<p>, rkos:<p>, rkos_qr:<p>")
        ->delimiter(',')
        ->capture_default_str();
    solve->add_option("--trials", sol.trials)->capture_default_str();
    solve->add_option("--cycles", sol.cycles, "Sweeps of M row-steps")->capture_default_str();
    solve->add_option("--max-steps", sol.max_steps, "Row-step cap (overrides --cycles)");
    solve->add_option("--residual-tol", sol.residual_tol)->capture_default_str();
    solve->add_option("--error-tol", sol.error_tol)->capture_default_str();
    solve->add_flag("--timing", sol.timing, "Record wall-clock times in traces");

    BoundsOptions bnd;
    auto* bounds_cmd = app.add_subcommand("bounds", "Convergence envelopes");
    bounds_cmd->add_option("--system", bnd.system, "System JSON")->required();
    bounds_cmd->add_option("--kinds", bnd.kinds, "all | strohmer, galantai, ssw, ssw_smallest, rkos, welch, compare")
        ->delimiter(',')
        ->capture_default_str();
    bounds_cmd->add_option("--block-size", bnd.block_size, "Rows per block")->capture_default_str();
    bounds_cmd->add_option("--steps", bnd.steps, "Row-steps for the Strohmer envelope (default 10*M)");
    bounds_cmd->add_option("--cycles", bnd.cycles, "Cycles for per-cycle envelopes")->capture_default_str();

    AnalyzeOptions ana;
    auto* analyze = app.add_subcommand("analyze", "Coherence report and angle histogram");
    analyze->add_option("--system", ana.system, "System JSON")->required();
    analyze->add_option("--bin-width", ana.bin_width, "Histogram bin width in degrees")->capture_default_str();

    std::vector<std::string> reversed(args.rbegin(), args.rend());
    try {
        app.parse(reversed);
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e, out, err);
        return code == 0 ? ok : config_error;
    }

    try {
        if (generate->parsed()) return cmd_generate(common, gen, out);
        if (solve->parsed()) return cmd_solve(common, sol, out, err);
        if (bounds_cmd->parsed()) return cmd_bounds(common, bnd, out, err);
        return cmd_analyze(common, ana, out);
    } catch (const ConfigError& e) {
        err << "config error: " << e.what() << "\n";
        return config_error;
    } catch (const IoError& e) {
        err << "i/o error: " << e.what() << "\n";
        return io_error;
    } catch (const std::exception& e) {
        err << "error: " << e.what() << "\n";
        return numerical_error;
    }
}

} // namespace kaczmarz::cli
