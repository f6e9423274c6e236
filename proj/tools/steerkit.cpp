// steerkit command-line front end.
//
// Exit codes: 0 ok, 2 simulation failure, 3 input error, 4 design failure.

#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <functional>
#include <future>
#include <iostream>
#include <map>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <json.hpp>

#include "config.hpp"
#include "steerkit/curvkit.hpp"
#include "steerkit/error.hpp"
#include "steerkit/lqr.hpp"
#include "steerkit/margins.hpp"
#include "steerkit/pathkit.hpp"
#include "steerkit/simkit.hpp"
#include "steerkit/smoothing.hpp"
#include "svg.hpp"

#ifndef STEERKIT_VERSION
#define STEERKIT_VERSION "0.0.0"
#endif

namespace {

using namespace steerkit;
using namespace steerkit::cli;

enum Exit { kOk = 0, kSimFailure = 2, kInputError = 3, kDesignFailure = 4 };

// ---------------------------------------------------------------------------
// Output handling

fs::path output_root() {
    if (const char* env = std::getenv("STEERKIT_OUT"); env && *env) return env;
    return ".";
}

std::string num(double v) {
    char buf[32];
    std::snprintf(buf, sizeof buf, "%.17g", v);
    return buf;
}

// JSON cannot hold inf or nan.
json finite_or_null(double v) { return std::isfinite(v) ? json(v) : json(nullptr); }

class Output {
public:
    explicit Output(fs::path dir) : dir_(std::move(dir)) {}

    const fs::path& dir() const { return dir_; }

    void write(const std::string& rel, const std::function<void(std::ostream&)>& fill) {
        const fs::path p = dir_ / rel;
        fs::create_directories(p.parent_path());
        std::ofstream out(p, std::ios::binary);
        if (!out) throw InputError("cannot write " + p.string());
        fill(out);
        if (!out) throw InputError("write failed for " + p.string());
        artifacts_.push_back(rel);
    }

    void write_json(const std::string& rel, const json& j) {
        write(rel, [&](std::ostream& o) { o << j.dump(2) << '\n'; });
    }

    void manifest(const std::string& command, const std::optional<fs::path>& config, const std::string& config_bytes,
                  std::optional<std::uint64_t> seed, const std::vector<std::string>& args) {
        json m;
        m["tool"] = "steerkit";
        m["version"] = STEERKIT_VERSION;
        m["command"] = command;
        m["config"] = config ? json(config->string()) : json(nullptr);
        m["config_hash"] = fnv1a_hex(config_bytes);
        m["seed"] = seed ? json(*seed) : json(nullptr);
        m["out_dir"] = dir_.string();
        m["arguments"] = args;
        m["artifacts"] = artifacts_;
        const fs::path p = dir_ / "manifest.json";
        std::ofstream out(p, std::ios::binary);
        out << m.dump(2) << '\n';
        if (!out) throw InputError("cannot write " + p.string());
    }

private:
    fs::path dir_;
    std::vector<std::string> artifacts_;
};

/// Checks a previous run's manifest against the current config bytes.
int verify_manifest(const fs::path& dir, const std::string& config_bytes) {
    const fs::path mp = dir / "manifest.json";
    if (!fs::exists(mp)) {
        std::cerr << "steerkit: no manifest in " << dir.string() << '\n';
        return kInputError;
    }
    const json m = parse_json(read_file(mp), mp.string());
    bool ok = true;
    const std::string now = fnv1a_hex(config_bytes);
    if (m.value("config_hash", std::string()) != now) {
        std::cerr << "steerkit: config drift: manifest hash " << m.value("config_hash", std::string()) << ", current "
                  << now << '\n';
        ok = false;
    }
    for (const auto& a : m.value("artifacts", json::array())) {
        if (!fs::exists(dir / a.get<std::string>())) {
            std::cerr << "steerkit: missing artifact " << a.get<std::string>() << '\n';
            ok = false;
        }
    }
    if (ok) std::cout << "manifest ok: " << mp.string() << '\n';
    return ok ? kOk : kInputError;
}

std::vector<double> parse_list(const std::string& s, const std::string& what) {
    std::vector<double> out;
    std::stringstream ss(s);
    std::string item;
    while (std::getline(ss, item, ',')) {
        try {
            std::size_t used = 0;
            out.push_back(std::stod(item, &used));
            if (used != item.size()) throw std::invalid_argument(item);
        } catch (const std::exception&) {
            throw InputError(what + ": cannot parse '" + item + "' as a number");
        }
    }
    if (out.empty()) throw InputError(what + ": empty list");
    return out;
}

/// "a:b:step" (inclusive) or "a,b,c".
std::vector<double> parse_grid(const std::string& s) {
    if (s.find(':') == std::string::npos) return parse_list(s, "--grid");
    std::vector<double> parts;
    std::stringstream ss(s);
    std::string item;
    while (std::getline(ss, item, ':')) parts.push_back(parse_list(item, "--grid").front());
    if (parts.size() != 3 || !(parts[2] > 0.0) || !(parts[1] >= parts[0]))
        throw InputError("--grid: expected start:stop:step with step > 0");
    std::vector<double> g;
    const long n = std::lround(std::floor((parts[1] - parts[0]) / parts[2] + 1e-9));
    for (long i = 0; i <= n; ++i) g.push_back(parts[0] + static_cast<double>(i) * parts[2]);
    return g;
}

lqr::Designer parse_model(const std::string& m) {
    if (m == "kinematic") return lqr::Designer::kinematic;
    if (m == "dynamic") return lqr::Designer::dynamic;
    throw InputError("--model: expected 'kinematic' or 'dynamic'");
}

/// State weights followed by the control weight, e.g. "1,1,1".
lqr::LqrWeights parse_weights_arg(const std::optional<std::string>& s, lqr::Designer d) {
    if (!s) return lqr::LqrWeights::equal(d);
    auto v = parse_list(*s, "--weights");
    const std::size_t n = lqr::state_count(d);
    if (v.size() != n + 1)
        throw InputError("--weights: expected " + std::to_string(n) + " state weights and one control weight");
    lqr::LqrWeights w{std::vector<double>(v.begin(), v.begin() + static_cast<long>(n)), v.back()};
    w.validate(n);
    return w;
}

void write_path_csv(std::ostream& o, const pathkit::RefPath& path) {
    o << "s,X,Y,psi_d,kappa\n";
    for (const auto& p : path.points())
        o << num(p.s) << ',' << num(p.X) << ',' << num(p.Y) << ',' << num(p.psi_d) << ',' << num(p.kappa) << '\n';
}

json metrics_json(const simkit::SimLog& log, const simkit::Metrics& m) {
    auto stats = [](const simkit::ErrorStats& s) {
        return json{{"max_abs_e_y", s.max_abs_e_y}, {"rms_e_y", s.rms_e_y}, {"max_abs_e_psi", s.max_abs_e_psi}};
    };
    json j = stats(m.whole);
    j["status"] = simkit::to_string(log.status);
    if (!log.message.empty()) j["message"] = log.message;
    j["settle_band"] = m.settle_band;
    j["settled"] = m.settled;
    j["settle_distance"] = m.settle_distance;
    j["distance"] = m.distance;
    j["duration"] = log.records.empty() ? 0.0 : log.records.back().t;
    j["post_contact"] = stats(m.post_contact);
    return j;
}

// ---------------------------------------------------------------------------
// simulate

struct PreparedRun {
    Scenario scenario;
    lqr::GainSchedule gains;
    fs::path dir;
};

lqr::GainSchedule scenario_gains(const Scenario& sc) {
    const auto& c = sc.config;
    const lqr::Designer d = c.controller == simkit::ControllerKind::kinematic_ff_fb ? lqr::Designer::kinematic
                                                                                     : lqr::Designer::dynamic;
    if (sc.gains.file) {
        std::ifstream in(*sc.gains.file);
        if (!in) throw InputError("cannot read gains file " + sc.gains.file->string());
        auto g = lqr::read_gains_csv(in, c.vehicle);
        if (g.designer() != d) throw InputError("gains file does not match the scenario controller");
        return g;
    }
    return lqr::build_schedule(sc.gains.grid, d, c.vehicle, sc.gains.weights.value_or(lqr::LqrWeights::equal(d)),
                               sc.gains.dt);
}

int write_run(const PreparedRun& run, const std::vector<std::string>& args) {
    const auto& c = run.scenario.config;
    const auto log = simkit::run_scenario(c, run.gains);
    Output out(run.dir);
    out.write("log.csv", [&](std::ostream& o) { simkit::write_log_csv(o, log); });
    if (log.records.empty()) {
        // Lost before the first step: nothing to measure or plot.
        out.manifest("simulate", run.scenario.source, run.scenario.bytes, c.seed, args);
        std::cerr << "steerkit: simulation ended early: " << log.message << '\n';
        return log.ok() ? kInputError : kSimFailure;
    }
    const auto metrics = simkit::compute_metrics(log);

    out.write("path.csv", [&](std::ostream& o) { write_path_csv(o, c.path); });
    out.write("gains.csv", [&](std::ostream& o) { lqr::write_gains_csv(o, run.gains); });
    out.write_json("metrics.json", metrics_json(log, metrics));

    std::vector<double> X, Y, s, ey, epsi, kp, ka, kd, kf;
    for (const auto& r : log.records) {
        X.push_back(r.pose.X);
        Y.push_back(r.pose.Y);
        s.push_back(r.s);
        ey.push_back(r.error.e_y);
        epsi.push_back(r.error.e_psi);
        kp.push_back(r.kappa_path);
        ka.push_back(r.kappa_ack);
        kd.push_back(r.kappa_diff);
        kf.push_back(r.kappa_fused);
    }
    std::vector<double> PX, PY;
    for (const auto& p : c.path.points()) {
        PX.push_back(p.X);
        PY.push_back(p.Y);
    }
    out.write("plots/trajectory.svg", [&](std::ostream& o) {
        svg::Panel p{"Trajectory", "X [m]", "Y [m]", {}, {}, {}, false, true, {}};
        p.series.push_back({"reference", PX, PY, svg::palette(0), true});
        p.series.push_back({"vehicle", X, Y, svg::palette(1), false});
        svg::write(o, run.scenario.name + ": trajectory", {p});
    });
    out.write("plots/error.svg", [&](std::ostream& o) {
        svg::Panel a{"Lateral error", "s [m]", "e_y [m]", {{"e_y", s, ey, svg::palette(0), false}}, {}, {0.0}, false, false, {}};
        svg::Panel b{"Heading error", "s [m]", "e_psi [rad]", {{"e_psi", s, epsi, svg::palette(1), false}}, {}, {0.0}, false, false, {}};
        svg::write(o, run.scenario.name + ": tracking error", {a, b});
    });
    out.write("plots/curvature.svg", [&](std::ostream& o) {
        svg::Panel p{"Curvature sources", "s [m]", "kappa [1/m]", {}, {}, {}, false, false, {}};
        p.series.push_back({"path", s, kp, svg::palette(0), true});
        p.series.push_back({"ackermann", s, ka, svg::palette(1), false});
        p.series.push_back({"differential", s, kd, svg::palette(2), false});
        p.series.push_back({"fused", s, kf, svg::palette(3), false});
        svg::write(o, run.scenario.name + ": curvature", {p});
    });
    out.manifest("simulate", run.scenario.source, run.scenario.bytes, c.seed, args);

    std::cout << run.dir.string() << ": " << simkit::to_string(log.status) << ", max |e_y| = " << metrics.whole.max_abs_e_y
              << " m, max |e_psi| = " << metrics.whole.max_abs_e_psi << " rad\n";
    if (!log.ok()) {
        std::cerr << "steerkit: simulation ended early: " << log.message << '\n';
        return kSimFailure;
    }
    return kOk;
}

int cmd_simulate(const fs::path& config, const std::optional<std::string>& out_opt, const std::optional<std::string>& sweep,
                 bool verify, const std::optional<fs::path>& gains_file, const std::vector<std::string>& args) {
    const std::string bytes = read_file(config);
    const fs::path root = output_root();

    if (!sweep) {
        Scenario sc = parse_scenario(bytes, config);
        const fs::path dir = root / out_opt.value_or(sc.name);
        if (verify) return verify_manifest(dir, bytes);
        if (gains_file) sc.gains.file = *gains_file;
        PreparedRun run{sc, scenario_gains(sc), dir};
        return write_run(run, args);
    }

    const auto eq = sweep->find('=');
    if (eq == std::string::npos || eq == 0) throw InputError("--sweep: expected key=a,b,c");
    const std::string key = sweep->substr(0, eq);
    std::vector<std::string> values;
    {
        std::stringstream ss(sweep->substr(eq + 1));
        std::string v;
        while (std::getline(ss, v, ',')) values.push_back(v);
    }
    if (values.empty()) throw InputError("--sweep: no values");

    // Everything is parsed and designed before any directory is created.
    const json base = parse_json(bytes, config.string());
    std::vector<PreparedRun> runs;
    std::string name;
    for (const auto& v : values) {
        json doc = base;
        apply_override(doc, key, v);
        Scenario sc = parse_scenario(doc.dump(), config);
        sc.bytes = bytes;
        if (gains_file) sc.gains.file = *gains_file;
        if (name.empty()) name = sc.name;
        const fs::path dir = root / out_opt.value_or(name) / (key + "=" + v);
        runs.push_back({sc, scenario_gains(sc), dir});
    }
    if (verify) {
        int rc = kOk;
        for (const auto& r : runs) rc = std::max(rc, verify_manifest(r.dir, bytes));
        return rc;
    }
    std::vector<std::future<int>> jobs;
    for (const auto& r : runs) jobs.push_back(std::async(std::launch::async, [&r, &args] { return write_run(r, args); }));
    int rc = kOk;
    for (auto& j : jobs) rc = std::max(rc, j.get());
    return rc;
}

// ---------------------------------------------------------------------------
// design

int cmd_design(const std::optional<fs::path>& params_file, const std::string& grid, const std::optional<std::string>& weights,
               double dt, const std::string& model, const std::optional<std::string>& out_opt, bool verify,
               const std::vector<std::string>& args) {
    const std::string bytes = params_file ? read_file(*params_file) : std::string();
    const fs::path dir = output_root() / out_opt.value_or("design");
    if (verify) return verify_manifest(dir, bytes);
    const auto p = load_params(params_file);
    const auto d = parse_model(model);
    const auto w = parse_weights_arg(weights, d);
    const auto speeds = parse_grid(grid);
    const auto sched = lqr::build_schedule(speeds, d, p, w, dt);

    Output out(dir);
    out.write("gains.csv", [&](std::ostream& o) { lqr::write_gains_csv(o, sched); });
    out.write("gains.svg", [&](std::ostream& o) {
        svg::Panel pan{std::string("Feedback gains vs speed (") + lqr::to_string(d) + ")", "v [m/s]", "gain", {}, {}, {},
                       false, false, {}};
        for (std::size_t i = 0; i < lqr::state_count(d); ++i) {
            svg::Series s{"k" + std::to_string(i + 1), {}, {}, svg::palette(i), false};
            for (const auto& g : sched.gains()) {
                s.x.push_back(g.v);
                s.y.push_back(g.k[i]);
            }
            pan.series.push_back(std::move(s));
        }
        svg::write(o, "LQR gain schedule", {pan});
    });
    out.manifest("design", params_file, bytes, std::nullopt, args);
    std::cout << dir.string() << ": " << sched.gains().size() << " certified gain rows\n";
    return kOk;
}

// ---------------------------------------------------------------------------
// curvature

int cmd_curvature(const fs::path& log_file, const std::optional<fs::path>& params_file,
                  const std::optional<std::string>& out_opt, bool verify, const std::vector<std::string>& args) {
    const std::string bytes = read_file(log_file);
    const fs::path dir = output_root() / out_opt.value_or("curvature");
    if (verify) return verify_manifest(dir, bytes);
    const auto p = load_params(params_file);
    std::istringstream in(bytes);
    const auto table = pathkit::read_csv(in);
    for (const char* req : {"t", "psi", "steer", "yaw_rate", "speed"})
        if (!table.column(req)) throw InputError(std::string("curvature: log is missing channel '") + req + "'");
    if (table.rows.empty()) throw InputError("curvature: log has no samples");
    const auto ct = *table.column("t"), cp = *table.column("psi"), cs = *table.column("steer"),
               cr = *table.column("yaw_rate"), cv = *table.column("speed");
    const auto cx = table.column("X"), cy = table.column("Y");
    const std::size_t n = table.rows.size();

    curvkit::KfState kf;
    std::vector<double> t(n), ka(n), kd(n), kfu(n), var(n);
    for (std::size_t i = 0; i < n; ++i) {
        const auto& row = table.rows[i];
        if (i > 0 && !(row[ct] > table.rows[i - 1][ct])) throw InputError("curvature: timestamps must increase");
        t[i] = row[ct];
        ka[i] = curvkit::ackermann_curvature(row[cs], p.L);
        // Heading relative to the direction of travel when positions are
        // logged, which keeps the differential formula regular.
        double psi_rel = row[cp];
        if (cx && cy && n > 1) {
            const auto& a = table.rows[i == 0 ? 0 : i - 1];
            const auto& b = table.rows[i + 1 == n ? i : i + 1];
            const double dx = b[*cx] - a[*cx], dy = b[*cy] - a[*cy];
            if (std::hypot(dx, dy) > 1e-9) psi_rel = models::wrap_angle(row[cp] - std::atan2(dy, dx));
        }
        std::optional<curvkit::CurvatureSample> zd;
        try {
            kd[i] = curvkit::differential_curvature(psi_rel, row[cr], row[cv]);
            zd = curvkit::CurvatureSample{t[i], kd[i], curvkit::Source::differential, kf.diff_variance_at(row[cv])};
        } catch (const InputError&) {
            kd[i] = std::numeric_limits<double>::quiet_NaN();
        }
        const curvkit::CurvatureSample za{t[i], ka[i], curvkit::Source::ackermann, kf.r_ack};
        if (i == 0) {
            kf.kappa_hat = ka[i];
            kf.P = kf.r_ack;
        } else {
            kf = curvkit::kf_update(kf, t[i] - t[i - 1], za, zd);
        }
        kfu[i] = kf.kappa_hat;
        var[i] = kf.P;
    }

    Output out(dir);
    out.write("curvature.csv", [&](std::ostream& o) {
        o << "t,kappa_ack,kappa_diff,kappa_fused,fused_var\n";
        for (std::size_t i = 0; i < n; ++i)
            o << num(t[i]) << ',' << num(ka[i]) << ',' << num(kd[i]) << ',' << num(kfu[i]) << ',' << num(var[i]) << '\n';
    });
    out.write("curvature.svg", [&](std::ostream& o) {
        svg::Panel a{"Curvature by source", "t [s]", "kappa [1/m]", {}, {}, {}, false, false, {}};
        a.series = {{"ackermann", t, ka, svg::palette(0), false},
                    {"differential", t, kd, svg::palette(1), false},
                    {"fused", t, kfu, svg::palette(2), false}};
        svg::Panel b = a;
        b.title = "Near zero (zoomed)";
        b.y_range = std::pair{-0.01, 0.01};
        b.hlines = {0.0};
        svg::write(o, "Curvature estimates", {a, b});
    });
    out.manifest("curvature", log_file, bytes, std::nullopt, args);
    std::cout << dir.string() << ": " << n << " samples\n";
    return kOk;
}

// ---------------------------------------------------------------------------
// margins

int cmd_margins(const std::optional<fs::path>& params_file, double speed, const std::optional<std::string>& weights,
                const std::string& model, double dt, std::size_t points, const std::optional<std::string>& out_opt,
                bool verify, const std::vector<std::string>& args) {
    const std::string bytes = params_file ? read_file(*params_file) : std::string();
    const fs::path dir = output_root() / out_opt.value_or("margins");
    if (verify) return verify_manifest(dir, bytes);
    if (!(speed > 0.0) || !std::isfinite(speed)) throw InputError("--speed must be positive");
    if (points < 2) throw InputError("--points must be at least 2");
    const auto p = load_params(params_file);
    const auto d = parse_model(model);
    const auto w = parse_weights_arg(weights, d);
    const auto g = lqr::design(d, speed, p, w, dt);
    const auto a = margins::analyze_design(d, g, p, points);
    const auto& m = a.margins;

    json j;
    j["model"] = lqr::to_string(d);
    j["speed"] = speed;
    j["dt"] = dt;
    j["gains"] = g.k;
    j["closed_loop_radius"] = g.closed_loop_radius;
    j["gm"] = finite_or_null(m.gm);
    j["gm_db"] = finite_or_null(m.gm_db());
    j["gm_freq"] = finite_or_null(m.gm_freq);
    j["has_phase_crossover"] = m.has_phase_crossover;
    j["phase_crossovers"] = m.phase_crossovers;
    j["pm"] = finite_or_null(m.pm);
    j["pm_freq"] = finite_or_null(m.pm_freq);
    j["has_gain_crossover"] = m.has_gain_crossover;
    j["gain_crossovers"] = m.gain_crossovers;
    j["delay_margin"] = finite_or_null(m.delay_margin());
    j["grid_points"] = points;

    Output out(dir);
    out.write("bode.csv", [&](std::ostream& o) {
        o << "omega,mag_db,phase_deg\n";
        for (std::size_t i = 0; i < a.response.omegas.size(); ++i)
            o << num(a.response.omegas[i]) << ',' << num(a.response.mag_db[i]) << ',' << num(a.response.phase_deg[i]) << '\n';
    });
    out.write_json("margins.json", j);
    out.write("bode.svg", [&](std::ostream& o) {
        svg::Panel mag{"Magnitude", "omega [rad/s]", "|L| [dB]", {{"|L|", a.response.omegas, a.response.mag_db, svg::palette(0), false}},
                       {}, {0.0}, true, false, {}};
        svg::Panel ph{"Phase", "omega [rad/s]", "phase [deg]", {{"arg L", a.response.omegas, a.response.phase_deg, svg::palette(1), false}},
                      {}, {-180.0}, true, false, {}};
        if (m.has_gain_crossover) {
            mag.markers.push_back({m.pm_freq, "PM " + svg::fmt(m.pm) + " deg"});
            ph.markers.push_back({m.pm_freq, "PM " + svg::fmt(m.pm) + " deg"});
        }
        if (m.has_phase_crossover) {
            mag.markers.push_back({m.gm_freq, "GM " + svg::fmt(m.gm_db()) + " dB"});
            ph.markers.push_back({m.gm_freq, "GM " + svg::fmt(m.gm_db()) + " dB"});
        }
        svg::write(o, "Loop at the plant input, v = " + svg::fmt(speed) + " m/s", {mag, ph});
    });
    out.manifest("margins", params_file, bytes, std::nullopt, args);
    std::cout << dir.string() << ": GM " << (m.has_phase_crossover ? svg::fmt(m.gm) : std::string("inf")) << ", PM "
              << svg::fmt(m.pm) << " deg\n";
    return kOk;
}

// ---------------------------------------------------------------------------
// smooth

int cmd_smooth(const fs::path& path_file, const std::optional<fs::path>& params_file, double speed, double spacing,
               double window, const std::optional<std::string>& out_opt, bool verify, const std::vector<std::string>& args) {
    const std::string bytes = read_file(path_file);
    const fs::path dir = output_root() / out_opt.value_or("smooth");
    if (verify) return verify_manifest(dir, bytes);
    const auto p = load_params(params_file);
    std::istringstream in(bytes);
    const auto raw_log = pathkit::read_recorded_csv(in);
    const auto raw = pathkit::load_recorded(raw_log, {spacing, 10});
    pathkit::SmoothOptions opt;
    opt.v = speed;
    opt.spacing = spacing;
    opt.window = window;
    const auto sm = pathkit::smooth_recorded(raw, p, opt);

    pathkit::RecordedLog out_log;
    for (const auto& q : sm.points())
        out_log.push_back({q.s / speed, q.X, q.Y, q.psi_d, q.kappa * speed, speed, std::atan(q.kappa * p.L)});

    Output out(dir);
    out.write("smoothed.csv", [&](std::ostream& o) { pathkit::write_recorded_csv(o, out_log); });
    out.write("raw_path.csv", [&](std::ostream& o) { write_path_csv(o, raw); });
    out.write("smoothed_path.csv", [&](std::ostream& o) { write_path_csv(o, sm); });
    out.write("smooth.svg", [&](std::ostream& o) {
        auto col = [](const pathkit::RefPath& r, auto f) {
            std::vector<double> v;
            for (const auto& q : r.points()) v.push_back(f(q));
            return v;
        };
        auto S = [](const pathkit::PathPoint& q) { return q.s; };
        auto K = [](const pathkit::PathPoint& q) { return q.kappa; };
        auto Xf = [](const pathkit::PathPoint& q) { return q.X; };
        auto Yf = [](const pathkit::PathPoint& q) { return q.Y; };
        svg::Panel xy{"Path", "X [m]", "Y [m]", {}, {}, {}, false, true, {}};
        xy.series = {{"raw", col(raw, Xf), col(raw, Yf), svg::palette(0), false},
                     {"smoothed", col(sm, Xf), col(sm, Yf), svg::palette(1), false}};
        svg::Panel k{"Curvature", "s [m]", "kappa [1/m]", {}, {}, {0.0}, false, false, {}};
        k.series = {{"raw", col(raw, S), col(raw, K), svg::palette(0), false},
                    {"smoothed", col(sm, S), col(sm, K), svg::palette(1), false}};
        svg::write(o, "Path smoothing", {xy, k});
    });
    out.manifest("smooth", path_file, bytes, std::nullopt, args);
    std::cout << dir.string() << ": " << sm.size() << " samples over " << sm.length() << " m\n";
    return kOk;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"steerkit: lateral path-tracking control design and simulation"};
    app.set_version_flag("--version", STEERKIT_VERSION);
    app.require_subcommand(1);
    const std::vector<std::string> args(argv + 1, argv + argc);
    std::function<int()> action;

    std::optional<std::string> out_opt;
    bool verify = false;
    auto common = [&](CLI::App* sub) {
        sub->add_option("--out", out_opt, "Output directory, relative to $STEERKIT_OUT when set");
        sub->add_flag("--verify", verify, "Check an existing run's manifest against the inputs instead of running");
    };

    // simulate
    fs::path sim_config;
    std::optional<std::string> sweep;
    std::optional<fs::path> sim_gains;
    auto* sim = app.add_subcommand("simulate", "Run a closed-loop scenario");
    sim->add_option("config", sim_config, "Scenario JSON file")->required();
    sim->add_option("--sweep", sweep, "Batch over one config key, e.g. initial_offset.e_y=-1,1");
    sim->add_option("--gains", sim_gains, "Use a gains.csv instead of designing");
    common(sim);
    sim->callback([&] { action = [&] { return cmd_simulate(sim_config, out_opt, sweep, verify, sim_gains, args); }; });

    // design
    std::optional<fs::path> params;
    std::string grid = "1:15:1";
    std::optional<std::string> weights;
    double dt = lqr::kDefaultDt;
    std::string model = "kinematic";
    auto* des = app.add_subcommand("design", "Design a certified LQR gain schedule");
    des->add_option("params", params, "Vehicle parameter JSON");
    des->add_option("--grid", grid, "Speeds as start:stop:step or a comma list");
    des->add_option("--weights", weights, "State weights then control weight, comma separated");
    des->add_option("--dt", dt, "Controller period [s]");
    des->add_option("--model", model, "kinematic or dynamic");
    common(des);
    des->callback([&] { action = [&] { return cmd_design(params, grid, weights, dt, model, out_opt, verify, args); }; });

    // curvature
    fs::path curv_log;
    auto* cur = app.add_subcommand("curvature", "Three-source curvature estimates from a drive log");
    cur->add_option("log", curv_log, "CSV log with t,psi,steer,yaw_rate,speed")->required();
    cur->add_option("--params", params, "Vehicle parameter JSON");
    common(cur);
    cur->callback([&] { action = [&] { return cmd_curvature(curv_log, params, out_opt, verify, args); }; });

    // margins
    double speed = 0.0;
    std::size_t points = 400;
    auto* mar = app.add_subcommand("margins", "Gain and phase margins of a designed loop");
    mar->add_option("params", params, "Vehicle parameter JSON");
    mar->add_option("--speed", speed, "Design speed [m/s]")->required();
    mar->add_option("--weights", weights, "State weights then control weight, comma separated");
    mar->add_option("--model", model, "kinematic or dynamic");
    mar->add_option("--dt", dt, "Controller period [s]");
    mar->add_option("--points", points, "Frequency grid size");
    common(mar);
    mar->callback([&] {
        action = [&] { return cmd_margins(params, speed, weights, model, dt, points, out_opt, verify, args); };
    });

    // smooth
    fs::path smooth_path;
    double smooth_speed = 3.0, spacing = 0.25, window = pathkit::SmoothOptions{}.window;
    auto* smo = app.add_subcommand("smooth", "Smooth a recorded path by closed-loop tracking");
    smo->add_option("path", smooth_path, "Recorded log CSV (t,X,Y,psi[,yaw_rate,speed,steer])")->required();
    smo->add_option("--params", params, "Vehicle parameter JSON");
    smo->add_option("--speed", smooth_speed, "Tracking speed [m/s]");
    smo->add_option("--spacing", spacing, "Output sample spacing [m]");
    smo->add_option("--window", window, "Prefilter half-window [m]");
    common(smo);
    smo->callback([&] {
        action = [&] { return cmd_smooth(smooth_path, params, smooth_speed, spacing, window, out_opt, verify, args); };
    });

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int rc = app.exit(e);
        return rc == 0 ? kOk : kInputError;
    }

    try {
        return action();
    } catch (const InputError& e) {
        std::cerr << "steerkit: input error: " << e.what() << '\n';
        return kInputError;
    } catch (const DesignError& e) {
        std::cerr << "steerkit: design failure: " << e.what() << '\n';
        return kDesignFailure;
    } catch (const NumericError& e) {
        std::cerr << "steerkit: design failure: " << e.what() << '\n';
        return kDesignFailure;
    } catch (const SimulationError& e) {
        std::cerr << "steerkit: simulation failure: " << e.what() << '\n';
        return kSimFailure;
    } catch (const fs::filesystem_error& e) {
        std::cerr << "steerkit: input error: " << e.what() << '\n';
        return kInputError;
    } catch (const std::exception& e) {
        std::cerr << "steerkit: simulation failure: " << e.what() << '\n';
        return kSimFailure;
    }
}
