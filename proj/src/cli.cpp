#include "hvlab/cli.hpp"

#include "hvlab/bohmian.hpp"
#include "hvlab/correlations.hpp"
#include "hvlab/ensembles.hpp"
#include "hvlab/lhv.hpp"
#include "hvlab/spin_algebra.hpp"

#include <json.hpp>

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <sstream>
#include <stdexcept>
#include <vector>

namespace hvlab::cli {

namespace fs = std::filesystem;
using json = nlohmann::json;

namespace {

// ---- config schema ---------------------------------------------------------

const std::map<std::string, std::map<std::string, std::string>>& schemas() {
    static const std::map<std::string, std::map<std::string, std::string>> s = {
        {"chsh-scan",
         {{"seed", "1"}, {"out", "out"}, {"threads", "1"}, {"theta-steps", "360"}}},
        {"trials",
         {{"seed", "1"},
          {"out", "out"},
          {"threads", "1"},
          {"model", "mixture"},
          {"n", "100000"},
          {"theta-a", "0"},
          {"phi-a", "0"},
          {"theta-b", "0"},
          {"phi-b", "0"}}},
        {"lhv-sim",
         {{"seed", "1"},
          {"out", "out"},
          {"threads", "1"},
          {"model", "sign"},
          {"n", "100000"},
          {"theta-steps", "50"}}},
        {"dispersion-check",
         {{"seed", "1"},
          {"out", "out"},
          {"threads", "1"},
          {"d", "2,3,4"},
          {"eps", "0.1,0.05,0.025"},
          {"x0", "1"},
          {"p0", "0.7"}}},
        {"bohm-evolve",
         {{"seed", "1"},
          {"out", "out"},
          {"threads", "1"},
          {"preset", "free-gaussian"},
          {"grid-n", "auto"},
          {"box", "auto"},
          {"dt", "0.001"},
          {"steps", "1000"},
          {"particles", "200"},
          {"save-every", "10"},
          {"probes", "200"}}},
    };
    return s;
}

[[noreturn]] void bad_key(const std::string& sub, const std::string& key) {
    throw std::invalid_argument("unknown key '" + key + "' for subcommand '" + sub +
                                "'");
}

std::int64_t get_int(const ExperimentConfig& cfg, const std::string& key) {
    const std::string& s = cfg.params.at(key);
    std::size_t pos = 0;
    std::int64_t v = 0;
    try {
        v = std::stoll(s, &pos);
    } catch (const std::exception&) {
        pos = std::string::npos;
    }
    if (pos != s.size())
        throw std::invalid_argument("key '" + key + "': expected an integer, got '" +
                                    s + "'");
    return v;
}

double get_real(const ExperimentConfig& cfg, const std::string& key) {
    const std::string& s = cfg.params.at(key);
    std::size_t pos = 0;
    double v = 0.0;
    try {
        v = std::stod(s, &pos);
    } catch (const std::exception&) {
        pos = std::string::npos;
    }
    if (pos != s.size())
        throw std::invalid_argument("key '" + key + "': expected a number, got '" + s +
                                    "'");
    return v;
}

std::vector<std::string> split_list(const std::string& s) {
    std::vector<std::string> out;
    std::string item;
    std::stringstream ss(s);
    while (std::getline(ss, item, ',')) out.push_back(item);
    return out;
}

std::vector<std::int64_t> get_int_list(const ExperimentConfig& cfg,
                                       const std::string& key) {
    std::vector<std::int64_t> out;
    for (const auto& item : split_list(cfg.params.at(key))) {
        try {
            out.push_back(std::stoll(item));
        } catch (const std::exception&) {
            throw std::invalid_argument("key '" + key + "': bad integer list entry '" +
                                        item + "'");
        }
    }
    return out;
}

std::vector<double> get_real_list(const ExperimentConfig& cfg, const std::string& key) {
    std::vector<double> out;
    for (const auto& item : split_list(cfg.params.at(key))) {
        try {
            out.push_back(std::stod(item));
        } catch (const std::exception&) {
            throw std::invalid_argument("key '" + key + "': bad number list entry '" +
                                        item + "'");
        }
    }
    return out;
}

// ---- CSV -------------------------------------------------------------------

std::string fmt(double v) {
    char buf[40];
    std::snprintf(buf, sizeof buf, "%.17g", v);
    return buf;
}

class CsvWriter {
  public:
    CsvWriter(const fs::path& dir, const std::string& name, const std::string& header)
        : path_(dir / name) {
        body_ = header + "\n";
    }

    template <typename... Cols> void row(const Cols&... cols) {
        bool first = true;
        ((body_ += (first ? "" : ",") + cell(cols), first = false), ...);
        body_ += "\n";
    }

    const fs::path& path() const { return path_; }
    std::string filename() const { return path_.filename().string(); }

    void write() const {
        std::ofstream out(path_, std::ios::binary);
        if (!out) throw std::runtime_error("cannot write " + path_.string());
        out << body_;
    }

  private:
    static std::string cell(double v) { return fmt(v); }
    static std::string cell(int v) { return std::to_string(v); }
    static std::string cell(std::int64_t v) { return std::to_string(v); }
    static std::string cell(std::uint64_t v) { return std::to_string(v); }
    static std::string cell(const std::string& v) { return v; }
    static std::string cell(const char* v) { return v; }

    fs::path path_;
    std::string body_;
};

std::string timestamp_utc() {
    const auto now = std::chrono::system_clock::now();
    const std::time_t t = std::chrono::system_clock::to_time_t(now);
    char buf[32];
    std::tm tm_utc{};
    gmtime_r(&t, &tm_utc);
    std::strftime(buf, sizeof buf, "%Y-%m-%dT%H:%M:%SZ", &tm_utc);
    return buf;
}

void write_manifest(const ExperimentConfig& cfg, const fs::path& dir,
                    const std::vector<std::string>& outputs) {
    json m;
    m["artifact"] = kArtifactName;
    m["version"] = kArtifactVersion;
    m["subcommand"] = cfg.subcommand;
    m["config"] = json::object();
    for (const auto& [k, v] : cfg.params) m["config"][k] = v;
    m["outputs"] = outputs;
    m["timestamp"] = timestamp_utc();
    std::ofstream out(dir / "manifest.json", std::ios::binary);
    out << m.dump(2) << "\n";
}

// ---- subcommands -------------------------------------------------------------

using correlations::CorrelationModel;
using correlations::ModelKind;
using spin::Direction;

int cmd_chsh_scan(const ExperimentConfig& cfg, const fs::path& dir) {
    const std::int64_t steps = get_int(cfg, "theta-steps");
    if (steps < 1) throw std::invalid_argument("key 'theta-steps': must be >= 1");
    const CorrelationModel singlet(ModelKind::Singlet);
    const CorrelationModel mixture(ModelKind::Mixture);

    CsvWriter csv(dir, "chsh_scan.csv", "theta,singlet_chsh,mixture_chsh,mixture_lhs");
    for (std::int64_t k = 0; k < steps; ++k) {
        const double theta = 2.0 * M_PI * static_cast<double>(k) / static_cast<double>(steps);
        const auto s = correlations::bell_config(theta);
        csv.row(theta, correlations::chsh(singlet, s), correlations::chsh(mixture, s),
                correlations::mixture_lhs(theta));
    }
    csv.write();
    write_manifest(cfg, dir, {csv.filename()});
    return 0;
}

int cmd_trials(const ExperimentConfig& cfg, const fs::path& dir) {
    const std::string model_name = cfg.params.at("model");
    ModelKind kind;
    if (model_name == "singlet") {
        kind = ModelKind::Singlet;
    } else if (model_name == "mixture") {
        kind = ModelKind::Mixture;
    } else {
        throw std::invalid_argument("key 'model': expected singlet or mixture");
    }
    const std::int64_t n = get_int(cfg, "n");
    if (n < 1) throw std::invalid_argument("key 'n': need at least one trial");

    const Direction a = Direction::polar(get_real(cfg, "theta-a"), get_real(cfg, "phi-a"));
    const Direction b = Direction::polar(get_real(cfg, "theta-b"), get_real(cfg, "phi-b"));
    const auto result = correlations::sample_trials(
        CorrelationModel(kind), a, b, static_cast<std::uint64_t>(n),
        static_cast<std::uint64_t>(get_int(cfg, "seed")),
        static_cast<int>(get_int(cfg, "threads")));

    const fs::path trials_path = dir / "trials.csv";
    {
        std::ofstream out(trials_path, std::ios::binary);
        out << correlations::trials_csv(result);
    }
    CsvWriter summary(dir, "trials_summary.csv", "model,n,estimate,stderr");
    summary.row(model_name, static_cast<std::int64_t>(n), result.estimate,
                result.stderr_est);
    summary.write();
    write_manifest(cfg, dir, {"trials.csv", summary.filename()});
    return 0;
}

int cmd_lhv_sim(const ExperimentConfig& cfg, const fs::path& dir) {
    const auto model = lhv::model_by_name(cfg.params.at("model"));
    const std::int64_t n = get_int(cfg, "n");
    const std::int64_t steps = get_int(cfg, "theta-steps");
    if (n < 2) throw std::invalid_argument("key 'n': need n >= 2");
    if (steps < 1) throw std::invalid_argument("key 'theta-steps': must be >= 1");
    const auto seed = static_cast<std::uint64_t>(get_int(cfg, "seed"));
    const int threads = static_cast<int>(get_int(cfg, "threads"));

    CsvWriter corr(dir, "lhv_correlation.csv", "theta,mean,stderr");
    CsvWriter chsh_csv(dir, "lhv_chsh.csv", "theta,value,stderr");
    bool bound_ok = true;
    for (std::int64_t k = 0; k < steps; ++k) {
        const double theta = 2.0 * M_PI * static_cast<double>(k) / static_cast<double>(steps);
        const Direction a = Direction::z_axis();
        const Direction b = Direction::polar(theta);
        const auto est = lhv::estimate_correlation(*model, a, b,
                                                   static_cast<std::uint64_t>(n),
                                                   seed + static_cast<std::uint64_t>(k),
                                                   threads);
        corr.row(theta, est.mean, est.stderr_est);

        const auto settings = correlations::bell_config(theta);
        const auto c = lhv::chsh_of_model(*model, settings,
                                          static_cast<std::uint64_t>(n),
                                          seed + static_cast<std::uint64_t>(k), threads);
        chsh_csv.row(theta, c.mean, c.stderr_est);
        if (c.mean > 2.0 + 5.0 * c.stderr_est) bound_ok = false;
    }
    corr.write();
    chsh_csv.write();
    write_manifest(cfg, dir, {corr.filename(), chsh_csv.filename()});
    if (!bound_ok) {
        std::cerr << "lhv-sim: CHSH bound exceeded beyond 5 standard errors\n";
        return 1;
    }
    return 0;
}

int cmd_dispersion_check(const ExperimentConfig& cfg, const fs::path& dir) {
    const auto dims = get_int_list(cfg, "d");
    const auto eps_seq = get_real_list(cfg, "eps");
    const double x0 = get_real(cfg, "x0");
    const double p0 = get_real(cfg, "p0");

    const auto ensemble = ensembles::TrajectoryEnsemble::free_particle(x0, p0);
    const double t = 0.5;

    CsvWriter disp(dir, "dispersion.csv", "eps,observable,dispersion");
    const std::vector<std::pair<std::string, ensembles::PhaseSpaceFn>> observables = {
        {"x", [](const std::vector<double>& x, const std::vector<double>&) { return x[0]; }},
        {"p", [](const std::vector<double>&, const std::vector<double>& p) { return p[0]; }},
        {"x2", [](const std::vector<double>& x, const std::vector<double>&) { return x[0] * x[0]; }},
        {"xp", [](const std::vector<double>& x, const std::vector<double>& p) { return x[0] * p[0]; }},
    };
    for (const auto& [name, f] : observables) {
        std::vector<double> per_eps;
        const double limit = ensembles::classical_dispersion(ensemble, t, f, eps_seq, per_eps);
        for (std::size_t i = 0; i < eps_seq.size(); ++i)
            disp.row(eps_seq[i], name, per_eps[i]);
        disp.row(0.0, name, limit);
    }
    disp.write();

    CsvWriter gap(dir, "von_neumann_gap.csv", "d,gap");
    for (const std::int64_t d : dims) {
        if (d < 1) throw std::invalid_argument("key 'd': dimensions must be >= 1");
        std::vector<cplx> basis(static_cast<std::size_t>(d), 0.0);
        basis[0] = 1.0;
        const auto rho = spin::DensityMatrix::identity(static_cast<int>(d));
        gap.row(d, ensembles::von_neumann_gap(rho, Matrix::outer(basis)));
    }
    gap.write();

    CsvWriter norm_csv(dir, "coincidence_norm.csv", "eps,integral");
    for (const double eps : eps_seq)
        norm_csv.row(eps, ensembles::integrate_coincidence(ensemble, t, eps));
    norm_csv.write();

    write_manifest(cfg, dir, {disp.filename(), gap.filename(), norm_csv.filename()});
    return 0;
}

int cmd_bohm_evolve(const ExperimentConfig& cfg, const fs::path& dir) {
    const std::string preset = cfg.params.at("preset");
    const auto seed = static_cast<std::uint64_t>(get_int(cfg, "seed"));
    const int threads = static_cast<int>(get_int(cfg, "threads"));

    if (bohmian::is_two_particle_preset(preset)) {
        const auto tp = bohmian::two_particle_preset_by_name(preset);
        const int probes = static_cast<int>(get_int(cfg, "probes"));
        const auto report = bohmian::factorization_test(tp, probes, seed);

        CsvWriter fact(dir, "factorization.csv",
                       "probes,max_spread,verdict,witness_x1,witness_x2,witness_x2_alt");
        fact.row(report.probes_used, report.max_spread,
                 report.local ? "local" : "nonlocal", report.witness_x1,
                 report.witness_x2, report.witness_x2_alt);
        fact.write();

        CsvWriter rho(dir, "fields_rho.csv", "x,y,value");
        for (int i = 0; i < tp.n1; ++i)
            for (int j = 0; j < tp.n2; ++j)
                rho.row(tp.coord1(i), tp.coord2(j), tp.rho(i, j));
        rho.write();
        write_manifest(cfg, dir, {fact.filename(), rho.filename()});
        return 0;
    }

    // 1D evolution presets
    std::string grid_n = cfg.params.at("grid-n");
    std::string box = cfg.params.at("box");
    bohmian::WaveGrid w = bohmian::preset_by_name(preset);
    if (grid_n != "auto" || box != "auto") {
        const int n = grid_n == "auto" ? w.n[0] : static_cast<int>(get_int(cfg, "grid-n"));
        const double length =
            box == "auto" ? w.spacing[0] * w.n[0] : get_real(cfg, "box");
        if (preset == "free-gaussian")
            w = bohmian::preset_free_gaussian(n, length);
        else if (preset == "harmonic-ground")
            w = bohmian::preset_harmonic_ground(n, length);
        else
            w = bohmian::preset_double_slit(n, length);
    }
    const bohmian::Potential v = preset == "harmonic-ground"
                                     ? bohmian::harmonic_potential(w)
                                     : bohmian::Potential(w.nodes(), 0.0);

    const double dt = get_real(cfg, "dt");
    const std::int64_t steps = get_int(cfg, "steps");
    const std::int64_t particles = get_int(cfg, "particles");
    const std::int64_t save_every = get_int(cfg, "save-every");
    if (steps < 1) throw std::invalid_argument("key 'steps': must be >= 1");
    if (particles < 1) throw std::invalid_argument("key 'particles': must be >= 1");
    if (save_every < 1) throw std::invalid_argument("key 'save-every': must be >= 1");

    const auto starts =
        bohmian::sample_from_density(w, static_cast<int>(particles), seed);
    std::vector<double> sorted_starts = starts;
    std::sort(sorted_starts.begin(), sorted_starts.end());

    const auto run = bohmian::run_guidance(w, v, dt, static_cast<int>(steps),
                                           sorted_starts,
                                           static_cast<int>(save_every), false, threads);

    CsvWriter traj(dir, "trajectories.csv", "t,particle,x");
    for (std::size_t k = 0; k < run.traj.times.size(); ++k)
        for (int p = 0; p < run.traj.particles(); ++p)
            traj.row(run.traj.times[k], p, run.traj.positions[k][static_cast<std::size_t>(p)]);
    traj.write();

    // residuals between consecutive solver steps at each save instant
    CsvWriter residuals(dir, "residuals.csv", "t,hj_rms,continuity_rms");
    {
        bohmian::WaveGrid wr = w;
        auto prev = bohmian::polar_decompose(wr);
        for (std::int64_t step = 0; step < steps; ++step) {
            bohmian::evolve(wr, v, dt, 1);
            const auto cur = bohmian::polar_decompose(wr);
            if ((step + 1) % save_every == 0) {
                const auto hj = bohmian::hj_residual(prev, cur, v);
                const auto ct = bohmian::continuity_residual(prev, cur);
                residuals.row(wr.time, hj.rms, ct.rms);
            }
            prev = cur;
        }

        const auto fields = bohmian::polar_decompose(wr);
        const auto q = bohmian::quantum_potential(fields);
        CsvWriter fr(dir, "fields_R.csv", "x,value");
        CsvWriter fsv(dir, "fields_S.csv", "x,value");
        CsvWriter fq(dir, "fields_Q.csv", "x,value");
        CsvWriter fp(dir, "fields_P.csv", "x,value");
        for (int i = 0; i < wr.n[0]; ++i) {
            const double x = wr.coord(0, i);
            const auto idx = static_cast<std::size_t>(i);
            fr.row(x, fields.r[idx]);
            fsv.row(x, fields.s[idx]);
            fq.row(x, q[idx]);
            fp.row(x, fields.r[idx] * fields.r[idx]);
        }
        fr.write();
        fsv.write();
        fq.write();
        fp.write();
    }
    residuals.write();

    write_manifest(cfg, dir,
                   {"trajectories.csv", "residuals.csv", "fields_R.csv", "fields_S.csv",
                    "fields_Q.csv", "fields_P.csv"});
    return 0;
}

// ---- argv / config handling ----------------------------------------------------

void merge_checked(ExperimentConfig& cfg, const std::string& key,
                   const std::string& value) {
    if (!cfg.params.count(key)) bad_key(cfg.subcommand, key);
    cfg.params[key] = value;
}

void load_config_file(ExperimentConfig& cfg, const std::string& path) {
    std::ifstream in(path);
    if (!in) throw std::invalid_argument("cannot open config file: " + path);
    if (fs::path(path).extension() == ".json") {
        json j;
        in >> j;
        const json& obj = j.contains("config") ? j.at("config") : j;
        if (j.contains("subcommand") && j.at("subcommand") != cfg.subcommand)
            throw std::invalid_argument("manifest subcommand does not match '" +
                                        cfg.subcommand + "'");
        for (const auto& [k, v] : obj.items())
            merge_checked(cfg, k, v.is_string() ? v.get<std::string>() : v.dump());
        return;
    }
    std::string line;
    int line_no = 0;
    while (std::getline(in, line)) {
        ++line_no;
        const auto hash = line.find('#');
        if (hash != std::string::npos) line = line.substr(0, hash);
        const auto first = line.find_first_not_of(" \t\r");
        if (first == std::string::npos) continue;
        const auto eq = line.find('=');
        if (eq == std::string::npos)
            throw std::invalid_argument("config line " + std::to_string(line_no) +
                                        ": expected key=value");
        auto trim = [](std::string s) {
            const auto b = s.find_first_not_of(" \t\r");
            const auto e = s.find_last_not_of(" \t\r");
            return b == std::string::npos ? std::string() : s.substr(b, e - b + 1);
        };
        merge_checked(cfg, trim(line.substr(0, eq)), trim(line.substr(eq + 1)));
    }
}

} // namespace

std::string usage() {
    std::string u = "usage: hvlab <subcommand> [--key value ...]\n\nsubcommands:\n";
    for (const auto& [name, schema] : schemas()) {
        u += "  " + name + "\n    keys:";
        for (const auto& [key, def] : schema) u += " " + key + "=" + def;
        u += "\n";
    }
    u += "\ncommon flags: --config PATH (flat key=value or manifest.json; flags win)\n";
    return u;
}

ExperimentConfig parse_args(int argc, const char* const* argv) {
    if (argc < 2) throw std::invalid_argument("missing subcommand\n" + usage());
    ExperimentConfig cfg;
    cfg.subcommand = argv[1];
    const auto schema_it = schemas().find(cfg.subcommand);
    if (schema_it == schemas().end())
        throw std::invalid_argument("unknown subcommand '" + cfg.subcommand + "'\n" +
                                    usage());
    cfg.params = schema_it->second;

    // two passes: config file first, then flags override
    std::vector<std::pair<std::string, std::string>> flags;
    std::string config_path;
    for (int i = 2; i < argc; ++i) {
        std::string arg = argv[i];
        if (arg.rfind("--", 0) != 0)
            throw std::invalid_argument("expected --key, got '" + arg + "'");
        arg = arg.substr(2);
        std::string value;
        const auto eq = arg.find('=');
        if (eq != std::string::npos) {
            value = arg.substr(eq + 1);
            arg = arg.substr(0, eq);
        } else {
            if (i + 1 >= argc)
                throw std::invalid_argument("flag '--" + arg + "' needs a value");
            value = argv[++i];
        }
        if (arg == "config") {
            config_path = value;
        } else {
            flags.emplace_back(arg, value);
        }
    }
    if (!config_path.empty()) load_config_file(cfg, config_path);
    for (const auto& [k, v] : flags) merge_checked(cfg, k, v);
    return cfg;
}

int run(const ExperimentConfig& cfg) {
    const fs::path dir = cfg.params.at("out");
    fs::create_directories(dir);

    if (cfg.subcommand == "chsh-scan") return cmd_chsh_scan(cfg, dir);
    if (cfg.subcommand == "trials") return cmd_trials(cfg, dir);
    if (cfg.subcommand == "lhv-sim") return cmd_lhv_sim(cfg, dir);
    if (cfg.subcommand == "dispersion-check") return cmd_dispersion_check(cfg, dir);
    if (cfg.subcommand == "bohm-evolve") return cmd_bohm_evolve(cfg, dir);
    throw std::invalid_argument("unknown subcommand '" + cfg.subcommand + "'");
}

int run_main(int argc, const char* const* argv) {
    try {
        return run(parse_args(argc, argv));
    } catch (const std::invalid_argument& e) {
        std::cerr << "hvlab: " << e.what() << "\n";
        return 2;
    } catch (const std::exception& e) {
        std::cerr << "hvlab: " << e.what() << "\n";
        return 1;
    }
}

} // namespace hvlab::cli
