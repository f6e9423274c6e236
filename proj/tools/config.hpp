#pragma once

// Scenario and parameter files for the command-line tool. Everything is
// parsed and validated up front so that a bad file fails before any output
// directory is touched.

#include <cstdint>
#include <filesystem>
#include <fstream>
#include <optional>
#include <set>
#include <sstream>
#include <string>
#include <vector>

#include <json.hpp>

#include "steerkit/error.hpp"
#include "steerkit/lqr.hpp"
#include "steerkit/models.hpp"
#include "steerkit/pathkit.hpp"
#include "steerkit/simkit.hpp"
#include "steerkit/smoothing.hpp"

namespace steerkit::cli {

using json = nlohmann::json;
namespace fs = std::filesystem;

inline constexpr int kSchemaVersion = 1;

inline std::string read_file(const fs::path& p) {
    std::ifstream in(p, std::ios::binary);
    if (!in) throw InputError("cannot read " + p.string());
    std::ostringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

/// 64-bit FNV-1a, printed as 16 hex digits.
inline std::string fnv1a_hex(const std::string& bytes) {
    std::uint64_t h = 0xcbf29ce484222325ULL;
    for (unsigned char c : bytes) {
        h ^= c;
        h *= 0x100000001b3ULL;
    }
    char buf[17];
    std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(h));
    return buf;
}

inline json parse_json(const std::string& text, const std::string& origin) {
    try {
        return json::parse(text);
    } catch (const json::parse_error& e) {
        throw InputError(origin + ": malformed JSON: " + e.what());
    }
}

// Object reader that rejects keys nobody asked for.
class Reader {
public:
    Reader(const json& j, std::string where) : j_(j), where_(std::move(where)) {
        if (!j_.is_object()) throw InputError(where_ + ": expected an object");
    }

    /// Call once every expected key has been read.
    void done() const {
        for (const auto& [k, v] : j_.items())
            if (!seen_.count(k)) throw InputError(where_ + ": unknown key '" + k + "'");
    }

    bool has(const std::string& k) const { return j_.contains(k); }

    const json& at(const std::string& k) {
        seen_.insert(k);
        if (!j_.contains(k)) throw InputError(where_ + ": missing key '" + k + "'");
        return j_.at(k);
    }

    const json* find(const std::string& k) {
        seen_.insert(k);
        return j_.contains(k) ? &j_.at(k) : nullptr;
    }

    double number(const std::string& k, std::optional<double> fallback = std::nullopt) {
        const json* v = find(k);
        if (!v) {
            if (fallback) return *fallback;
            throw InputError(where_ + ": missing key '" + k + "'");
        }
        if (!v->is_number()) throw InputError(where_ + "." + k + ": expected a number");
        return v->get<double>();
    }

    int integer(const std::string& k, int fallback) {
        const json* v = find(k);
        if (!v) return fallback;
        if (!v->is_number_integer()) throw InputError(where_ + "." + k + ": expected an integer");
        return v->get<int>();
    }

    bool boolean(const std::string& k, bool fallback) {
        const json* v = find(k);
        if (!v) return fallback;
        if (!v->is_boolean()) throw InputError(where_ + "." + k + ": expected true or false");
        return v->get<bool>();
    }

    std::string string(const std::string& k, std::optional<std::string> fallback = std::nullopt) {
        const json* v = find(k);
        if (!v) {
            if (fallback) return *fallback;
            throw InputError(where_ + ": missing key '" + k + "'");
        }
        if (!v->is_string()) throw InputError(where_ + "." + k + ": expected a string");
        return v->get<std::string>();
    }

    std::vector<double> numbers(const std::string& k) {
        const json& v = at(k);
        if (!v.is_array()) throw InputError(where_ + "." + k + ": expected an array of numbers");
        std::vector<double> out;
        for (const auto& e : v) {
            if (!e.is_number()) throw InputError(where_ + "." + k + ": expected an array of numbers");
            out.push_back(e.get<double>());
        }
        return out;
    }

    const std::string& where() const { return where_; }

private:
    const json& j_;
    std::string where_;
    std::set<std::string> seen_;
};

inline models::VehicleParams parse_vehicle(const json& j, const std::string& where = "vehicle") {
    Reader r(j, where);
    models::VehicleParams p;
    p.m = r.number("m", p.m);
    p.Iz = r.number("Iz", p.Iz);
    p.Lf = r.number("Lf", p.Lf);
    p.Lr = r.number("Lr", p.Lr);
    p.L = r.number("L", p.Lf + p.Lr);
    p.Caf = r.number("Caf", p.Caf);
    p.Car = r.number("Car", p.Car);
    p.max_steer = r.number("max_steer", p.max_steer);
    r.done();
    p.validate();
    return p;
}

/// Vehicle parameters from a JSON file: either a bare parameter object or
/// a scenario file's "vehicle" entry.
inline models::VehicleParams load_params(const std::optional<fs::path>& file) {
    if (!file) return models::default_params();
    const json j = parse_json(read_file(*file), file->string());
    if (j.is_object() && j.contains("vehicle") && j.contains("schema_version")) return parse_vehicle(j.at("vehicle"));
    return parse_vehicle(j, file->string());
}

inline simkit::SensorChannel parse_channel(const json& j, simkit::SensorChannel c, const std::string& where) {
    Reader r(j, where);
    c.noise_std = r.number("noise_std", c.noise_std);
    c.quantization_step = r.number("quantization_step", c.quantization_step);
    c.rate_hz = r.number("rate_hz", c.rate_hz);
    c.delay_steps = r.integer("delay_steps", c.delay_steps);
    r.done();
    return c;
}

inline lqr::LqrWeights parse_weights(const json& j, lqr::Designer d, const std::string& where) {
    Reader r(j, where);
    lqr::LqrWeights w = lqr::LqrWeights::equal(d);
    if (r.has("q")) w.q_diag = r.numbers("q");
    w.r = r.number("r", w.r);
    r.done();
    w.validate(lqr::state_count(d));
    return w;
}

struct GainSpec {
    std::vector<double> grid{1, 2, 3, 4, 5, 6, 7, 8, 9, 10, 11, 12, 13, 14, 15};
    std::optional<lqr::LqrWeights> weights;
    double dt = lqr::kDefaultDt;
    std::optional<fs::path> file;  // precomputed gains.csv
};

struct Scenario {
    std::string name;
    simkit::ScenarioConfig config;
    GainSpec gains;
    fs::path source;
    std::string bytes;  // raw config text, hashed into the manifest
};

namespace detail {

inline pathkit::RefPath parse_path(const json& j, const fs::path& base, const models::VehicleParams& p) {
    Reader r(j, "path");
    const std::string kind = r.string("kind");
    const double spacing = r.number("spacing", 0.25);
    if (kind == "recorded" || kind == "parking") {
        pathkit::RecordedLog log;
        if (kind == "recorded") {
            const fs::path f = base / r.string("file");
            log = pathkit::read_recorded_csv(f.string());
        } else {
            log = simkit::parking_drive_log(p, r.number("speed", 1.5));
        }
        const bool smooth = r.boolean("smooth", false);
        r.done();
        auto path = pathkit::load_recorded(log, {spacing, 10});
        if (smooth) {
            pathkit::SmoothOptions opt;
            opt.spacing = spacing;
            path = pathkit::smooth_recorded(path, p, opt);
        }
        return path;
    }
    pathkit::PathShape s;
    if (kind == "line") s.kind = pathkit::PathKind::line;
    else if (kind == "circle") s.kind = pathkit::PathKind::circle;
    else if (kind == "lane_change") s.kind = pathkit::PathKind::lane_change;
    else if (kind == "s_curve") s.kind = pathkit::PathKind::s_curve;
    else throw InputError("path.kind: unknown kind '" + kind + "'");
    s.length = r.number("length", s.length);
    s.radius = r.number("radius", s.radius);
    s.arc_angle = r.number("arc_angle", s.arc_angle);
    s.left = r.boolean("left", s.left);
    s.entry = r.number("entry", s.entry);
    s.offset = r.number("offset", s.offset);
    s.transition = r.number("transition", s.transition);
    s.lead_in = r.number("lead_in", s.lead_in);
    s.lead_out = r.number("lead_out", s.lead_out);
    r.done();
    return pathkit::gen_path(s, spacing, p.L);
}

inline simkit::SpeedProfile parse_speed(const json& j) {
    if (j.is_number()) return simkit::SpeedProfile::constant(j.get<double>());
    if (!j.is_array()) throw InputError("speed: expected a number or an array of [t, v] pairs");
    simkit::SpeedProfile sp;
    sp.points.clear();
    for (const auto& e : j) {
        if (!e.is_array() || e.size() != 2 || !e[0].is_number() || !e[1].is_number())
            throw InputError("speed: expected [t, v] pairs");
        sp.points.emplace_back(e[0].get<double>(), e[1].get<double>());
    }
    return sp;
}

}  // namespace detail

inline Scenario parse_scenario(const std::string& text, const fs::path& source) {
    const json j = parse_json(text, source.string());
    Scenario sc;
    sc.source = source;
    sc.bytes = text;
    auto& c = sc.config;
    Reader r(j, "scenario");
    if (!r.at("schema_version").is_number_integer() || r.at("schema_version").get<int>() != kSchemaVersion)
        throw InputError("scenario: unsupported schema_version (expected " + std::to_string(kSchemaVersion) + ")");
    sc.name = r.string("name", source.stem().string());
    if (const json* s = r.find("seed")) {
        if (!s->is_number_unsigned()) throw InputError("scenario.seed: expected a non-negative integer");
        c.seed = s->get<std::uint64_t>();
    }
    if (const json* v = r.find("vehicle")) c.vehicle = parse_vehicle(*v);

    const std::string model = r.string("model", "kinematic");
    if (model == "kinematic") c.model = simkit::ModelKind::kinematic;
    else if (model == "dynamic") c.model = simkit::ModelKind::dynamic;
    else throw InputError("scenario.model: expected 'kinematic' or 'dynamic'");
    const std::string ctrl = r.string("controller", "kinematic_ff_fb");
    if (ctrl == "kinematic_ff_fb") c.controller = simkit::ControllerKind::kinematic_ff_fb;
    else if (ctrl == "dynamic_lqr") c.controller = simkit::ControllerKind::dynamic_lqr;
    else throw InputError("scenario.controller: expected 'kinematic_ff_fb' or 'dynamic_lqr'");

    const fs::path base = source.has_parent_path() ? source.parent_path() : fs::path(".");
    c.path = detail::parse_path(r.at("path"), base, c.vehicle);
    c.speed = detail::parse_speed(r.at("speed"));
    c.t_end = r.number("t_end");
    c.sim_dt = r.number("sim_dt", c.sim_dt);
    c.control_dt = r.number("control_dt", c.control_dt);
    c.feedforward = r.boolean("feedforward", c.feedforward);
    if (const json* o = r.find("initial_offset")) {
        Reader ro(*o, "initial_offset");
        c.initial_e_y = ro.number("e_y", 0.0);
        c.initial_e_psi = ro.number("e_psi", 0.0);
        ro.done();
    }
    if (const json* s = r.find("sensors")) {
        Reader rs(*s, "sensors");
        auto& S = c.sensors;
        if (const json* x = rs.find("position")) S.position = parse_channel(*x, S.position, "sensors.position");
        if (const json* x = rs.find("heading")) S.heading = parse_channel(*x, S.heading, "sensors.heading");
        if (const json* x = rs.find("yaw_rate")) S.yaw_rate = parse_channel(*x, S.yaw_rate, "sensors.yaw_rate");
        if (const json* x = rs.find("speed")) S.speed = parse_channel(*x, S.speed, "sensors.speed");
        if (const json* x = rs.find("steer")) S.steer = parse_channel(*x, S.steer, "sensors.steer");
        if (const json* x = rs.find("lateral_velocity"))
            S.lateral_velocity = parse_channel(*x, S.lateral_velocity, "sensors.lateral_velocity");
        rs.done();
    }
    if (const json* a = r.find("actuator")) {
        Reader ra(*a, "actuator");
        c.actuator.lag_tau = ra.number("lag_tau", c.actuator.lag_tau);
        c.actuator.delay_steps = ra.integer("delay_steps", c.actuator.delay_steps);
        c.actuator.rate_limit = ra.number("rate_limit", c.actuator.rate_limit);
        ra.done();
    }
    if (const json* k = r.find("kalman")) {
        Reader rk(*k, "kalman");
        c.kf.q_process = rk.number("q_process", c.kf.q_process);
        c.kf.r_ack = rk.number("r_ack", c.kf.r_ack);
        c.kf.r_diff = rk.number("r_diff", c.kf.r_diff);
        c.kf.P = rk.number("P0", c.kf.P);
        rk.done();
    }
    const lqr::Designer d =
        c.controller == simkit::ControllerKind::kinematic_ff_fb ? lqr::Designer::kinematic : lqr::Designer::dynamic;
    if (const json* g = r.find("gains")) {
        Reader rg(*g, "gains");
        if (rg.has("grid")) sc.gains.grid = rg.numbers("grid");
        if (const json* w = rg.find("weights")) sc.gains.weights = parse_weights(*w, d, "gains.weights");
        sc.gains.dt = rg.number("dt", sc.gains.dt);
        if (rg.has("file")) sc.gains.file = base / rg.string("file");
        rg.done();
    }
    r.done();
    c.validate();
    return sc;
}

inline Scenario load_scenario(const fs::path& file) { return parse_scenario(read_file(file), file); }

/// Applies `key=value` to a JSON document; dotted keys address nested
/// objects and the value is parsed as JSON when it can be.
inline void apply_override(json& doc, const std::string& key, const std::string& value) {
    json* node = &doc;
    std::size_t start = 0;
    while (true) {
        const auto dot = key.find('.', start);
        const std::string part = key.substr(start, dot == std::string::npos ? std::string::npos : dot - start);
        if (part.empty()) throw InputError("sweep: malformed key '" + key + "'");
        if (!node->is_object()) throw InputError("sweep: '" + key + "' does not address an object member");
        if (dot == std::string::npos) {
            json v;
            try {
                v = json::parse(value);
            } catch (const json::parse_error&) {
                v = value;
            }
            (*node)[part] = v;
            return;
        }
        node = &(*node)[part];
        start = dot + 1;
    }
}

}  // namespace steerkit::cli
