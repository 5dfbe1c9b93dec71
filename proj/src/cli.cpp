#include "mtdc/cli.hpp"

#include "mtdc/assembly.hpp"
#include "mtdc/config.hpp"
#include "mtdc/csvio.hpp"
#include "mtdc/dynamics.hpp"
#include "mtdc/modal.hpp"
#include "mtdc/region.hpp"
#include "mtdc/system.hpp"

#include <chrono>
#include <cstdlib>
#include <ctime>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <sstream>

#include "CLI11.hpp"
#include "json.hpp"

namespace fs = std::filesystem;
using nlohmann::json;

namespace mtdc {

namespace {

constexpr double kMwPerKv = 1e3; // 1 MW/kV = 1000 W/V

std::string utc_now() {
    auto now = std::chrono::system_clock::now();
    std::time_t t = std::chrono::system_clock::to_time_t(now);
    char buf[32];
    std::tm tm{};
    gmtime_r(&t, &tm);
    std::strftime(buf, sizeof(buf), "%Y-%m-%dT%H:%M:%SZ", &tm);
    return buf;
}

struct CommonArgs {
    std::string config_path;
    std::vector<std::string> overrides;
    std::string out_dir = "runs";
    bool serial = false;
    std::string at_case; // case file applied to the analysis slopes

    Exec exec() const { return serial ? Exec::Serial : Exec::Parallel; }
};

void add_common(CLI::App* cmd, CommonArgs& args, bool with_case = true) {
    cmd->add_option("config", args.config_path, "system config JSON")->required();
    cmd->add_option("--set", args.overrides, "path=value overrides applied before parsing");
    cmd->add_option("--out", args.out_dir, "base directory for run artifacts");
    cmd->add_flag("--serial", args.serial, "run data-parallel sweeps on one thread");
    if (with_case)
        cmd->add_option("--at-case", args.at_case,
                        "case file with droop slopes for the analysis (p0 retuned to keep "
                        "the base operating point)");
}

json load_raw_config(const CommonArgs& args) {
    std::ifstream in(args.config_path);
    if (!in) throw ConfigError("cannot open config file '" + args.config_path + "'");
    json doc;
    try {
        doc = json::parse(in, nullptr, true, true); // allow comments in data files
    } catch (const json::exception& e) {
        throw ConfigError(std::string("JSON parse failure: ") + e.what());
    }
    for (const std::string& ov : args.overrides) apply_override(doc, ov);
    return doc;
}

std::string cache_dir(const CommonArgs& args) {
    if (const char* env = std::getenv("MTDC_CACHE_DIR")) return env;
    return args.out_dir + "/cache";
}

/// Loaded pipeline up to the operating point; the "effective" system has
/// the case slopes applied (p0-compensated at the operating point).
struct Pipeline {
    ValidatedConfig vcfg;
    SystemModel sys;           // effective system
    OperatingPoint op;
    std::string base_hash;     // before case application
    std::string eff_hash;      // after
    std::string case_name;
};

OperatingPoint cached_equilibrium(const SystemModel& sys, const std::string& hash,
                                  const std::string& cache) {
    fs::create_directories(cache);
    fs::path file = fs::path(cache) / (hash + ".op.json");
    if (fs::exists(file)) {
        std::ifstream in(file);
        json doc = json::parse(in);
        if (doc["dim"] == sys.map.dim()) {
            OperatingPoint op;
            op.x = Vec::Zero(sys.map.dim());
            for (int i = 0; i < sys.map.dim(); ++i) op.x(i) = doc["x"][i].get<double>();
            op.residual_norm = doc["residual"].get<double>();
            op.setpoints = sys.nominal;
            return op;
        }
    }
    OperatingPoint op = solve_equilibrium(sys);
    json doc;
    doc["dim"] = sys.map.dim();
    doc["residual"] = op.residual_norm;
    doc["x"] = std::vector<double>(op.x.data(), op.x.data() + op.x.size());
    std::ofstream out(file);
    out << doc.dump(1) << "\n";
    return op;
}

Pipeline load_pipeline(const CommonArgs& args, bool need_equilibrium = true) {
    json doc = load_raw_config(args);
    SystemConfig cfg = parse_config(doc);
    ValidatedConfig vcfg = validate(cfg);

    Pipeline p;
    p.base_hash = config_hash(cfg);
    SystemModel base = build_system(vcfg);

    if (need_equilibrium) p.op = cached_equilibrium(base, p.base_hash, cache_dir(args));

    if (!args.at_case.empty()) {
        CaseSlopes cs = parse_case_file(args.at_case);
        p.case_name = cs.name;
        std::vector<double> v_at_op;
        if (need_equilibrium)
            for (int i = 0; i < base.map.n; ++i)
                v_at_op.push_back(p.op.x(base.map.x3_vdc(i)));
        apply_case(cfg, cs, need_equilibrium ? &v_at_op : nullptr);
        vcfg = validate(cfg);
    }
    p.vcfg = vcfg;
    p.sys = build_system(vcfg);
    if (need_equilibrium) p.op.setpoints = p.sys.nominal;
    p.eff_hash = config_hash(cfg);
    return p;
}

struct RunDir {
    fs::path dir;
    json manifest;
    std::string started;

    RunDir(const CommonArgs& args, const std::string& subcmd, const std::string& hash,
           int argc, const char* const* argv) {
        dir = fs::path(args.out_dir) / (hash.substr(0, 12) + "-" + subcmd);
        fs::create_directories(dir);
        started = utc_now();
        std::string cmdline;
        for (int i = 0; i < argc; ++i) {
            if (i) cmdline += ' ';
            cmdline += argv[i];
        }
        manifest["tool"] = "mtdc";
        manifest["version"] = std::string(kVersion);
        manifest["command"] = cmdline;
        manifest["config_hash"] = hash;
        manifest["outputs"] = json::array();
    }

    std::string path(const std::string& name) {
        manifest["outputs"].push_back(name);
        return (dir / name).string();
    }

    void finish() {
        manifest["started"] = started;
        manifest["finished"] = utc_now();
        std::ofstream out(dir / "manifest.json");
        out << manifest.dump(1) << "\n";
        std::cout << "run artifacts in " << dir.string() << "\n";
    }
};

// ---------------------------------------------------------------------------
// Droop-axis naming: "k<i>" with the 1-based node position, or the node id.

int axis_from_token(const SystemModel& sys, const std::string& token) {
    const auto& nodes = sys.cfg.sys.nodes;
    int node_idx = -1;
    if (token.size() > 1 && token[0] == 'k' &&
        std::all_of(token.begin() + 1, token.end(), ::isdigit)) {
        int pos = std::stoi(token.substr(1)) - 1;
        if (pos < 0 || pos >= static_cast<int>(nodes.size()))
            throw ConfigError("axis '" + token + "': node position out of range");
        node_idx = pos;
    } else {
        node_idx = sys.cfg.sys.node_index(token);
    }
    for (size_t j = 0; j < sys.cfg.droop_nodes.size(); ++j)
        if (sys.cfg.droop_nodes[j] == node_idx) return static_cast<int>(j);
    throw ConfigError("axis '" + token + "': node '" + nodes[node_idx] +
                      "' has no droop control");
}

std::string axis_label(const SystemModel& sys, int axis) {
    return "k" + std::to_string(sys.cfg.droop_nodes[axis] + 1);
}

std::pair<double, double> parse_range(const std::string& text) {
    auto colon = text.find(':');
    if (colon == std::string::npos)
        throw ConfigError("range '" + text + "' must be LO:HI");
    return {std::stod(text.substr(0, colon)), std::stod(text.substr(colon + 1))};
}

// ---------------------------------------------------------------------------
// Eigensolution cache (binary).

void save_eig(const std::string& file, const EigenSolution& sol) {
    std::ofstream out(file, std::ios::binary);
    const char magic[8] = {'M', 'T', 'D', 'C', 'E', 'I', 'G', '1'};
    out.write(magic, 8);
    std::int64_t n = sol.eigenvalues.size();
    out.write(reinterpret_cast<const char*>(&n), 8);
    out.write(reinterpret_cast<const char*>(&sol.a_norm2), 8);
    auto dump = [&](const void* p, size_t bytes) {
        out.write(reinterpret_cast<const char*>(p), static_cast<std::streamsize>(bytes));
    };
    dump(sol.eigenvalues.data(), sizeof(Complex) * n);
    dump(sol.w.data(), sizeof(Complex) * n * n);
    dump(sol.z.data(), sizeof(Complex) * n * n);
    dump(sol.gaps.data(), sizeof(double) * n);
    std::vector<std::int32_t> partner(sol.conj_partner.begin(), sol.conj_partner.end());
    dump(partner.data(), 4 * n);
    std::vector<char> fl(sol.flagged.begin(), sol.flagged.end());
    dump(fl.data(), n);
}

std::optional<EigenSolution> load_eig(const std::string& file, int expect_n) {
    std::ifstream in(file, std::ios::binary);
    if (!in) return std::nullopt;
    char magic[8];
    in.read(magic, 8);
    if (std::string(magic, 8) != "MTDCEIG1") return std::nullopt;
    std::int64_t n = 0;
    in.read(reinterpret_cast<char*>(&n), 8);
    if (n != expect_n) return std::nullopt;
    EigenSolution sol;
    in.read(reinterpret_cast<char*>(&sol.a_norm2), 8);
    sol.eigenvalues.resize(n);
    sol.w.resize(n, n);
    sol.z.resize(n, n);
    sol.gaps.resize(n);
    in.read(reinterpret_cast<char*>(sol.eigenvalues.data()), sizeof(Complex) * n);
    in.read(reinterpret_cast<char*>(sol.w.data()), sizeof(Complex) * n * n);
    in.read(reinterpret_cast<char*>(sol.z.data()), sizeof(Complex) * n * n);
    in.read(reinterpret_cast<char*>(sol.gaps.data()), sizeof(double) * n);
    std::vector<std::int32_t> partner(n);
    in.read(reinterpret_cast<char*>(partner.data()), 4 * n);
    sol.conj_partner.assign(partner.begin(), partner.end());
    std::vector<char> fl(n);
    in.read(reinterpret_cast<char*>(fl.data()), n);
    sol.flagged.assign(fl.begin(), fl.end());
    if (!in) return std::nullopt;
    return sol;
}

EigenSolution cached_eig(const Pipeline& p, const SmallSignalModel& model,
                         const CommonArgs& args) {
    fs::path file = fs::path(cache_dir(args)) / (p.eff_hash + ".eig.bin");
    if (auto sol = load_eig(file.string(), model.map.dim())) return *sol;
    EigenSolution sol = eig_full(model.a_ss);
    fs::create_directories(file.parent_path());
    save_eig(file.string(), sol);
    return sol;
}

// ---------------------------------------------------------------------------
// Shared analysis steps.

struct Analysis {
    SmallSignalModel model;
    EigenSolution sol;
    SensitivityBundle bundle;
    ConstraintSet cs;
};

Analysis analyze(const Pipeline& p, const CommonArgs& args) {
    Analysis a;
    a.model = assemble_global(p.sys, p.op.x);
    a.sol = cached_eig(p, a.model, args);
    SensitivityOptions so;
    so.exec = args.exec();
    a.bundle = sensitivity_bundle(a.sol, a.model.m_k, nullptr, so);
    a.cs = build_constraints(a.bundle, a.sol, a.model.slopes);
    return a;
}

json supremum_json(const SystemModel& sys, const SupremumResult& r) {
    json out;
    out["axis"] = axis_label(sys, r.axis);
    out["node"] = sys.cfg.sys.nodes[sys.cfg.droop_nodes[r.axis]];
    out["k_sup_w_per_v"] = r.k_sup;
    out["k_sup_mw_per_kv"] = r.k_sup / kMwPerKv;
    out["bounded"] = r.bounded;
    out["binding_mode"] = r.binding_mode;
    out["init_deviation_mw_per_kv"] =
        std::vector<double>(r.init_deviation.data(),
                            r.init_deviation.data() + r.init_deviation.size());
    for (auto& v : out["init_deviation_mw_per_kv"]) v = v.get<double>() / kMwPerKv;
    return out;
}

// Builders for slope sweeps at a fixed operating point.

AxisModelBuilder axis_builder(const Pipeline& p, int axis) {
    Vec k0 = p.sys.droop_slopes();
    const SystemModel* sys = &p.sys;
    const Vec* x = &p.op.x;
    return [sys, x, k0, axis](double k_mwkv) {
        Vec k = k0;
        k(axis) = k_mwkv * kMwPerKv;
        return assemble_a_ss(*sys, *x, k);
    };
}

PlaneModelBuilder plane_builder(const Pipeline& p, int axis_i, int axis_j) {
    Vec k0 = p.sys.droop_slopes();
    const SystemModel* sys = &p.sys;
    const Vec* x = &p.op.x;
    return [sys, x, k0, axis_i, axis_j](double ki, double kj) {
        Vec k = k0;
        k(axis_i) = ki * kMwPerKv;
        k(axis_j) = kj * kMwPerKv;
        return assemble_a_ss(*sys, *x, k);
    };
}

// ---------------------------------------------------------------------------
// Subcommand bodies.

int run_validate(const CommonArgs& args) {
    json doc = load_raw_config(args);
    ValidatedConfig vcfg = validate(parse_config(doc));
    std::cout << "states: " << vcfg.state_dim << ", droop axes: " << vcfg.droop_nodes.size()
              << "\n";
    std::cout << "nodes: " << vcfg.n_nodes << ", lines: " << vcfg.n_lines << ", droop buses:";
    for (int i : vcfg.droop_nodes) std::cout << " " << vcfg.sys.nodes[i];
    std::cout << "\nconfig hash: " << config_hash(vcfg.sys) << "\n";
    return kExitOk;
}

int run_equilibrium(const CommonArgs& args, int argc, const char* const* argv) {
    Pipeline p = load_pipeline(args);
    RunDir run(args, "equilibrium", p.eff_hash, argc, argv);
    auto labels = p.sys.map.labels(p.sys.cfg.sys.nodes, p.sys.cfg.sys.lines);
    {
        CsvWriter w(run.path("operating_point.csv"));
        w.row({"state", "value"});
        for (int i = 0; i < p.sys.map.dim(); ++i) w.row({labels[i], format_double(p.op.x(i))});
    }
    json summary;
    summary["residual_norm"] = p.op.residual_norm;
    summary["v_dc"] = json::object();
    for (int i = 0; i < p.sys.map.n; ++i)
        summary["v_dc"][p.sys.cfg.sys.nodes[i]] = p.op.x(p.sys.map.x3_vdc(i));
    std::ofstream(run.path("equilibrium.json")) << summary.dump(1) << "\n";
    run.finish();
    std::cout << "scaled residual: " << p.op.residual_norm << "\n";
    return kExitOk;
}

int run_sim(const CommonArgs& args, const SimOptions& opts, bool full_states, int argc,
            const char* const* argv) {
    Pipeline p = load_pipeline(args);
    RunDir run(args, opts.linearized ? "sim-linear" : "sim", p.eff_hash, argc, argv);
    Trajectory traj = simulate(p.sys, p.op, p.sys.cfg.sys.scenario, opts);
    {
        CsvWriter w(run.path("trajectory.csv"));
        std::vector<std::string> hdr{"time"};
        hdr.insert(hdr.end(), traj.channel_labels.begin(), traj.channel_labels.end());
        if (full_states)
            hdr.insert(hdr.end(), traj.state_labels.begin(), traj.state_labels.end());
        w.row(hdr);
        for (int s = 0; s < traj.time.size(); ++s) {
            std::vector<std::string> cells{format_double(traj.time(s))};
            for (int c = 0; c < traj.channels.rows(); ++c)
                cells.push_back(format_double(traj.channels(c, s)));
            if (full_states)
                for (int c = 0; c < traj.states.rows(); ++c)
                    cells.push_back(format_double(traj.states(c, s)));
            w.row(cells);
        }
    }
    run.manifest["scenario"] = json::array();
    for (const ScenarioEvent& e : p.sys.cfg.sys.scenario)
        run.manifest["scenario"].push_back(
            {{"time", e.time}, {"target", e.target}, {"value", e.value}});
    run.manifest["dt"] = opts.dt;
    run.manifest["t_end"] = opts.t_end;
    run.manifest["newton_tol"] = opts.newton_tol;
    run.manifest["diverged"] = traj.diverged;
    run.finish();
    if (traj.diverged)
        std::cout << "trajectory diverged at t = " << traj.t_diverged << " s\n";
    else
        std::cout << "simulated " << traj.time(traj.time.size() - 1) << " s\n";
    return kExitOk;
}

int run_network_dump(const CommonArgs& args, int argc, const char* const* argv) {
    Pipeline p = load_pipeline(args, /*need_equilibrium=*/false);
    RunDir run(args, "network-dump", p.eff_hash, argc, argv);
    std::vector<std::string> line_tags, node_tags(p.sys.cfg.sys.nodes);
    for (const LineSpec& l : p.sys.cfg.sys.lines)
        line_tags.push_back(l.from_node + "-" + l.to_node);
    write_matrix_csv(run.path("J.csv"), p.sys.incidence.J, node_tags, line_tags);

    std::vector<std::string> x3_labels;
    for (const auto& t : line_tags) x3_labels.push_back("i_alpha." + t);
    for (const auto& t : line_tags) x3_labels.push_back("i_beta." + t);
    for (const auto& t : line_tags) x3_labels.push_back("v_t." + t);
    for (const auto& id : node_tags) x3_labels.push_back("v_dc." + id);
    write_matrix_csv(run.path("A3.csv"), p.sys.net.A3, x3_labels, x3_labels);
    std::vector<std::string> in_labels;
    for (const auto& id : node_tags) in_labels.push_back("i_dc." + id);
    write_matrix_csv(run.path("B3.csv"), p.sys.net.B3, in_labels, x3_labels);
    run.finish();
    return kExitOk;
}

int run_model_dump(const CommonArgs& args, const std::string& which, int argc,
                   const char* const* argv) {
    Pipeline p = load_pipeline(args);
    RunDir run(args, "model-dump", p.eff_hash, argc, argv);
    SmallSignalModel model = assemble_global(p.sys, p.op.x);
    auto labels = p.sys.map.labels(p.sys.cfg.sys.nodes, p.sys.cfg.sys.lines);
    const Mat* m = nullptr;
    if (which == "ass") {
        m = &model.a_ss;
    } else if (which == "a0") {
        m = &model.a0;
    } else if (which.size() > 1 && which[0] == 'm') {
        int axis = axis_from_token(p.sys, "k" + which.substr(1));
        m = &model.m_k[axis];
    } else {
        throw ConfigError("model dump: --matrix must be ass, a0 or m<j>");
    }
    write_matrix_csv(run.path(which + ".csv"), *m, labels, labels);
    run.finish();
    return kExitOk;
}

int run_eig(const CommonArgs& args, int argc, const char* const* argv) {
    Pipeline p = load_pipeline(args);
    Analysis a;
    a.model = assemble_global(p.sys, p.op.x);
    a.sol = cached_eig(p, a.model, args);
    RunDir run(args, "eig", p.eff_hash, argc, argv);
    Vec delta = margins(a.sol);
    {
        CsvWriter w(run.path("eigenvalues.csv"));
        w.row({"mode", "re", "im", "damping", "frequency_hz", "margin"});
        for (int i = 0; i < a.sol.eigenvalues.size(); ++i) {
            Complex lam = a.sol.eigenvalues(i);
            double mag = std::abs(lam);
            double damping = mag > 0 ? -lam.real() / mag : 0.0;
            w.row({std::to_string(i), format_double(lam.real()), format_double(lam.imag()),
                   format_double(damping),
                   format_double(lam.imag() / (2.0 * std::numbers::pi)),
                   format_double(delta(i))});
        }
    }
    run.finish();
    double worst = delta.minCoeff();
    std::cout << (worst > 0 ? "stable" : "UNSTABLE") << ", smallest margin " << worst << " 1/s\n";
    return kExitOk;
}

int run_sens(const CommonArgs& args, int argc, const char* const* argv) {
    Pipeline p = load_pipeline(args);
    Analysis a = analyze(p, args);
    RunDir run(args, "sens", p.eff_hash, argc, argv);
    std::vector<char> skip(a.sol.eigenvalues.size(), false);
    for (int i : a.bundle.excluded) skip[i] = true;
    {
        CsvWriter w(run.path("sens_first.csv"));
        w.row({"mode", "axis", "re", "im"});
        for (int i = 0; i < a.bundle.first.rows(); ++i) {
            if (skip[i]) continue;
            for (int j = 0; j < a.bundle.first.cols(); ++j)
                w.row({std::to_string(i), axis_label(p.sys, j),
                       format_double(a.bundle.first(i, j).real()),
                       format_double(a.bundle.first(i, j).imag())});
        }
    }
    {
        CsvWriter w(run.path("sens_second.csv"));
        w.row({"mode", "axis_j", "axis_l", "re", "im"});
        for (size_t i = 0; i < a.bundle.second.size(); ++i) {
            if (skip[i]) continue;
            const CMat& t = a.bundle.second[i];
            for (int j = 0; j < t.rows(); ++j)
                for (int l = j; l < t.cols(); ++l)
                    w.row({std::to_string(i), axis_label(p.sys, j), axis_label(p.sys, l),
                           format_double(t(j, l).real()), format_double(t(j, l).imag())});
        }
    }
    json summary;
    summary["excluded_modes"] = a.bundle.excluded;
    summary["excluded_reasons"] = a.bundle.excluded_reasons;
    std::ofstream(run.path("sens.json")) << summary.dump(1) << "\n";
    run.finish();
    return kExitOk;
}

int run_sup(const CommonArgs& args, const std::string& axis_token,
            const std::string& constraints_from, int argc, const char* const* argv) {
    // Study slopes come from the effective config (--at-case applied);
    // constraints come from --constraints-from when given, else self.
    Pipeline study = load_pipeline(args);
    int axis = axis_from_token(study.sys, axis_token);

    Analysis a;
    std::string expansion_name = "self";
    if (constraints_from.empty()) {
        a = analyze(study, args);
    } else {
        CommonArgs exp_args = args;
        exp_args.at_case = constraints_from;
        Pipeline expansion = load_pipeline(exp_args);
        a = analyze(expansion, exp_args);
        expansion_name = expansion.case_name;
    }
    Vec dev = study.sys.droop_slopes() - a.cs.k_star;
    SupremumResult r = estimate_supremum(a.cs, axis, dev);

    RunDir run(args, "sup", study.eff_hash, argc, argv);
    json out = supremum_json(study.sys, r);
    out["expansion_case"] = expansion_name;
    out["excluded_modes"] = a.bundle.excluded;
    std::ofstream(run.path("sup.json")) << out.dump(1) << "\n";
    run.finish();
    std::cout << axis_label(study.sys, axis) << " supremum: " << r.k_sup / kMwPerKv
              << " MW/kV (binding mode " << r.binding_mode << ", "
              << (r.bounded ? "bounded" : "UNBOUNDED, capped") << ")\n";
    return kExitOk;
}

int run_loci(const CommonArgs& args, const std::string& axis_token, const std::string& bracket,
             int samples, int argc, const char* const* argv) {
    Pipeline p = load_pipeline(args);
    int axis = axis_from_token(p.sys, axis_token);
    auto [lo, hi] = parse_range(bracket);
    LociOptions opts;
    opts.samples = samples;
    opts.exec = args.exec();
    LociResult res = loci_supremum(axis_builder(p, axis), lo, hi, opts);

    RunDir run(args, "loci", p.eff_hash, argc, argv);
    {
        CsvWriter w(run.path("locus.csv"));
        w.row({"k_mw_per_kv", "mode", "re", "im"});
        for (const LociSample& s : res.table)
            for (int i = 0; i < s.eigenvalues.size(); ++i)
                w.row({format_double(s.k), std::to_string(i),
                       format_double(s.eigenvalues(i).real()),
                       format_double(s.eigenvalues(i).imag())});
    }
    json out;
    out["axis"] = axis_label(p.sys, axis);
    out["k_sup_mw_per_kv"] = res.k_sup;
    out["max_re_at_sup"] = res.f_at_sup;
    out["multiple_crossings"] = res.multiple_crossings;
    std::ofstream(run.path("loci.json")) << out.dump(1) << "\n";
    run.finish();
    if (res.multiple_crossings)
        std::cout << "warning: several crossings in bracket, reporting the smallest\n";
    std::cout << axis_label(p.sys, axis) << " exact supremum: " << res.k_sup << " MW/kV\n";
    return kExitOk;
}

int run_region(const CommonArgs& args, const std::string& axes, const std::string& range_i,
               const std::string& range_j, int res, const std::string& method, int argc,
               const char* const* argv) {
    Pipeline p = load_pipeline(args);
    auto comma = axes.find(',');
    if (comma == std::string::npos) throw ConfigError("--axes must be of the form k1,k2");
    int ai = axis_from_token(p.sys, axes.substr(0, comma));
    int aj = axis_from_token(p.sys, axes.substr(comma + 1));
    auto [lo_i, hi_i] = parse_range(range_i);
    auto [lo_j, hi_j] = range_j.empty() ? std::make_pair(lo_i, hi_i) : parse_range(range_j);

    RunDir run(args, "region", p.eff_hash, argc, argv);
    auto write_grid = [&](const RegionGrid& g, const std::string& name) {
        CsvWriter w(run.path(name));
        w.row({"k_" + axis_label(p.sys, ai), "k_" + axis_label(p.sys, aj), "stable", "method"});
        for (int i = 0; i < g.ks_i.size(); ++i)
            for (int j = 0; j < g.ks_j.size(); ++j)
                w.row({format_double(g.ks_i(i)), format_double(g.ks_j(j)),
                       g.stable(i, j) ? "1" : "0", g.method});
    };

    std::optional<RegionGrid> taylor, loci;
    if (method == "taylor" || method == "both") {
        Analysis a = analyze(p, args);
        Vec fixed = Vec::Zero(p.sys.n_droop());
        RegionGrid g = scan_region_taylor(a.cs, ai, aj, fixed, lo_i * kMwPerKv, hi_i * kMwPerKv,
                                          lo_j * kMwPerKv, hi_j * kMwPerKv, res, args.exec());
        g.ks_i /= kMwPerKv;
        g.ks_j /= kMwPerKv;
        write_grid(g, "region_taylor.csv");
        taylor = std::move(g);
    }
    if (method == "loci" || method == "both") {
        RegionGrid g = scan_region_loci(plane_builder(p, ai, aj), ai, aj, lo_i, hi_i, lo_j, hi_j,
                                        res, args.exec());
        write_grid(g, "region_loci.csv");
        loci = std::move(g);
    }
    if (taylor && loci) {
        int agree = 0;
        for (int i = 0; i < res; ++i)
            for (int j = 0; j < res; ++j)
                if (taylor->stable(i, j) == loci->stable(i, j)) ++agree;
        json out;
        out["cells"] = res * res;
        out["agree"] = agree;
        out["agreement"] = static_cast<double>(agree) / (res * res);
        std::ofstream(run.path("agreement.json")) << out.dump(1) << "\n";
        std::cout << "taylor/loci agreement: " << 100.0 * agree / (res * res) << "% of cells\n";
    }
    run.finish();
    return kExitOk;
}

int run_xval(const CommonArgs& args, const std::string& case_a_path,
             const std::string& case_b_path, const std::string& loci_bracket, int argc,
             const char* const* argv) {
    CommonArgs args_a = args;
    args_a.at_case = case_a_path;
    CommonArgs args_b = args;
    args_b.at_case = case_b_path;
    Pipeline pa = load_pipeline(args_a);
    Pipeline pb = load_pipeline(args_b);
    Analysis aa = analyze(pa, args_a);
    Analysis ab = analyze(pb, args_b);

    Vec ka = pa.sys.droop_slopes();
    Vec kb = pb.sys.droop_slopes();

    auto pack = [&](const std::vector<SupremumResult>& rs, const SystemModel& sys) {
        json arr = json::array();
        for (const auto& r : rs) arr.push_back(supremum_json(sys, r));
        return arr;
    };

    json out;
    out["case_a"] = pa.case_name;
    out["case_b"] = pb.case_name;
    out["axes"] = json::array();
    for (int j = 0; j < pa.sys.n_droop(); ++j) out["axes"].push_back(axis_label(pa.sys, j));
    out["initial_mw_per_kv"]["case_a"] = std::vector<double>(ka.data(), ka.data() + ka.size());
    out["initial_mw_per_kv"]["case_b"] = std::vector<double>(kb.data(), kb.data() + kb.size());
    for (auto& v : out["initial_mw_per_kv"]["case_a"]) v = v.get<double>() / kMwPerKv;
    for (auto& v : out["initial_mw_per_kv"]["case_b"]) v = v.get<double>() / kMwPerKv;
    out["self_a"] = pack(cross_validate(aa.cs, ka), pa.sys);
    out["cross_b_on_a"] = pack(cross_validate(ab.cs, ka), pa.sys);
    out["self_b"] = pack(cross_validate(ab.cs, kb), pb.sys);
    out["cross_a_on_b"] = pack(cross_validate(aa.cs, kb), pb.sys);

    if (!loci_bracket.empty()) {
        auto [lo, hi] = parse_range(loci_bracket);
        LociOptions lopts;
        lopts.exec = args.exec();
        auto exact = [&](Pipeline& p) {
            json arr = json::array();
            for (int j = 0; j < p.sys.n_droop(); ++j) {
                LociResult r = loci_supremum(axis_builder(p, j), lo, hi, lopts);
                arr.push_back({{"axis", axis_label(p.sys, j)},
                               {"k_sup_mw_per_kv", r.k_sup},
                               {"multiple_crossings", r.multiple_crossings}});
            }
            return arr;
        };
        out["exact_a"] = exact(pa);
        out["exact_b"] = exact(pb);
    }

    RunDir run(args, "xval", pa.eff_hash, argc, argv);
    std::ofstream(run.path("xval.json")) << out.dump(1) << "\n";
    run.finish();
    return kExitOk;
}

int run_report(const std::vector<std::string>& inputs, const std::string& out_dir) {
    if (inputs.empty()) throw ConfigError("report: no xval.json inputs given");
    json doc;
    {
        std::ifstream in(inputs[0]);
        if (!in) {
            std::cerr << "report: missing run file '" << inputs[0] << "'\n";
            return kExitMissing;
        }
        doc = json::parse(in);
    }

    std::vector<std::string> axes;
    for (const auto& a : doc["axes"]) axes.push_back(a.get<std::string>());

    auto row_of = [&](const json& arr) {
        std::vector<double> v;
        for (const auto& e : arr) v.push_back(e["k_sup_mw_per_kv"].get<double>());
        return v;
    };

    struct Block {
        std::string title;
        std::vector<std::pair<std::string, std::vector<double>>> rows;
    };
    std::vector<Block> blocks;
    for (const char* side : {"a", "b"}) {
        std::string s(side);
        if (!doc.contains("self_" + s)) continue;
        Block b;
        b.title = "Case " + doc.value("case_" + s, s);
        std::vector<double> init;
        for (const auto& v : doc["initial_mw_per_kv"]["case_" + s]) init.push_back(v.get<double>());
        b.rows.emplace_back("initial", init);
        if (doc.contains("exact_" + s)) b.rows.emplace_back("exact (loci)", row_of(doc["exact_" + s]));
        b.rows.emplace_back("self-estimated", row_of(doc["self_" + s]));
        std::string other = (s == "a") ? "b" : "a";
        if (doc.contains("cross_" + other + "_on_" + s))
            b.rows.emplace_back("cross-estimated", row_of(doc["cross_" + other + "_on_" + s]));
        blocks.push_back(std::move(b));
    }
    if (blocks.empty()) {
        std::cerr << "report: input has no self-validation results\n";
        return kExitMissing;
    }
    for (const Block& b : blocks)
        for (const auto& [name, row] : b.rows)
            if (row.size() != axes.size())
                throw ConfigError("report: row '" + name + "' does not match the axis list");

    fs::create_directories(out_dir);
    CsvWriter csv(out_dir + "/report.csv");
    std::vector<std::string> hdr{"case", "row"};
    hdr.insert(hdr.end(), axes.begin(), axes.end());
    csv.row(hdr);

    for (const Block& b : blocks) {
        std::cout << b.title << " [MW/kV]\n";
        std::printf("  %-16s", "");
        for (const auto& a : axes) std::printf("%12s", a.c_str());
        std::printf("\n");
        for (const auto& [name, row] : b.rows) {
            std::printf("  %-16s", name.c_str());
            std::vector<std::string> cells{b.title, name};
            for (double v : row) {
                std::printf("%12.4f", v);
                cells.push_back(format_double(v));
            }
            std::printf("\n");
            csv.row(cells);
        }
    }
    std::cout << "report written to " << out_dir << "/report.csv\n";
    return kExitOk;
}

} // namespace

int cli_main(int argc, const char* const* argv) {
    CLI::App app{"droop-slope stability-region estimation for MMC-based MTDC grids"};
    app.require_subcommand(1);

    CommonArgs c_validate, c_eq, c_sim, c_net, c_model, c_eig, c_sens, c_sup, c_loci, c_region,
        c_xval;

    auto* cmd_validate = app.add_subcommand("validate", "parse and validate a config");
    add_common(cmd_validate, c_validate, false);

    auto* cmd_eq = app.add_subcommand("equilibrium", "solve and persist the operating point");
    add_common(cmd_eq, c_eq);

    auto* cmd_sim = app.add_subcommand("sim", "integrate the nonlinear (or linearized) model");
    SimOptions sim_opts;
    bool sim_full_states = false;
    add_common(cmd_sim, c_sim);
    cmd_sim->add_option("--t-end", sim_opts.t_end, "simulation horizon [s]");
    cmd_sim->add_option("--dt", sim_opts.dt, "fixed step [s]");
    cmd_sim->add_option("--stride", sim_opts.store_stride, "store every n-th step");
    cmd_sim->add_flag("--linear", sim_opts.linearized, "integrate the linearized model");
    cmd_sim->add_flag("--full-states", sim_full_states, "persist all states, not just channels");

    auto* cmd_network = app.add_subcommand("network", "dc-network inspection");
    auto* cmd_net_dump = cmd_network->add_subcommand("dump", "emit J, A3, B3 as CSV");
    add_common(cmd_net_dump, c_net, false);

    auto* cmd_model = app.add_subcommand("model", "small-signal model inspection");
    auto* cmd_model_dump = cmd_model->add_subcommand("dump", "emit global matrices as CSV");
    std::string model_matrix = "ass";
    add_common(cmd_model_dump, c_model);
    cmd_model_dump->add_option("--matrix", model_matrix, "ass | a0 | m<j>");

    auto* cmd_eig = app.add_subcommand("eig", "eigenvalues, damping and margins");
    add_common(cmd_eig, c_eig);

    auto* cmd_sens = app.add_subcommand("sens", "first/second-order slope sensitivities");
    add_common(cmd_sens, c_sens);

    auto* cmd_sup = app.add_subcommand("sup", "Taylor-estimated slope supremum");
    std::string sup_axis, sup_from;
    add_common(cmd_sup, c_sup);
    cmd_sup->add_option("--axis", sup_axis, "droop axis (k2 or node id)")->required();
    cmd_sup->add_option("--constraints-from", sup_from,
                        "case file whose expansion provides the constraints (cross-validation)");

    auto* cmd_loci = app.add_subcommand("loci", "exact supremum by eigenvalue-loci bisection");
    std::string loci_axis, loci_bracket = "1:2010";
    int loci_samples = 41;
    add_common(cmd_loci, c_loci);
    cmd_loci->add_option("--axis", loci_axis, "droop axis")->required();
    cmd_loci->add_option("--bracket", loci_bracket, "LO:HI sweep bracket [MW/kV]");
    cmd_loci->add_option("--samples", loci_samples, "locus table resolution");

    auto* cmd_region = app.add_subcommand("region", "2-D stability region scan");
    std::string region_axes, region_range = "0:120", region_range_j, region_method = "both";
    int region_res = 50;
    add_common(cmd_region, c_region);
    cmd_region->add_option("--axes", region_axes, "pair of droop axes, e.g. k1,k2")->required();
    cmd_region->add_option("--range", region_range, "LO:HI for the first axis [MW/kV]");
    cmd_region->add_option("--range-j", region_range_j, "LO:HI for the second axis");
    cmd_region->add_option("--res", region_res, "grid resolution per axis");
    cmd_region->add_option("--method", region_method, "taylor | loci | both");

    auto* cmd_xval = app.add_subcommand("xval", "self/cross validation of two slope cases");
    std::string xval_a, xval_b, xval_loci;
    add_common(cmd_xval, c_xval, false);
    cmd_xval->add_option("--case-a", xval_a, "case file A")->required();
    cmd_xval->add_option("--case-b", xval_b, "case file B")->required();
    cmd_xval->add_option("--with-loci", xval_loci, "LO:HI bracket to include exact suprema");

    auto* cmd_report = app.add_subcommand("report", "consolidate validation runs into tables");
    std::vector<std::string> report_inputs;
    std::string report_out = "runs/report";
    cmd_report->add_option("inputs", report_inputs, "xval.json files")->required();
    cmd_report->add_option("--out", report_out, "report output directory");

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        int rc = app.exit(e);
        return rc == 0 ? kExitOk : kExitUsage;
    }

    try {
        if (cmd_validate->parsed()) return run_validate(c_validate);
        if (cmd_eq->parsed()) return run_equilibrium(c_eq, argc, argv);
        if (cmd_sim->parsed()) return run_sim(c_sim, sim_opts, sim_full_states, argc, argv);
        if (cmd_network->parsed() && cmd_net_dump->parsed())
            return run_network_dump(c_net, argc, argv);
        if (cmd_model->parsed() && cmd_model_dump->parsed())
            return run_model_dump(c_model, model_matrix, argc, argv);
        if (cmd_eig->parsed()) return run_eig(c_eig, argc, argv);
        if (cmd_sens->parsed()) return run_sens(c_sens, argc, argv);
        if (cmd_sup->parsed()) return run_sup(c_sup, sup_axis, sup_from, argc, argv);
        if (cmd_loci->parsed())
            return run_loci(c_loci, loci_axis, loci_bracket, loci_samples, argc, argv);
        if (cmd_region->parsed())
            return run_region(c_region, region_axes, region_range, region_range_j, region_res,
                              region_method, argc, argv);
        if (cmd_xval->parsed()) return run_xval(c_xval, xval_a, xval_b, xval_loci, argc, argv);
        if (cmd_report->parsed()) return run_report(report_inputs, report_out);
        std::cerr << "no subcommand\n";
        return kExitUsage;
    } catch (const ConfigError& e) {
        std::cerr << "error: " << e.what() << "\n";
        return kExitConfig;
    } catch (const InfeasibleExpansionError& e) {
        std::cerr << "error: " << e.what() << "\n";
        return kExitInfeasible;
    } catch (const ConvergenceError& e) {
        std::cerr << "error: " << e.what() << "\n";
        return kExitConvergence;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return kExitConvergence;
    }
}

} // namespace mtdc
