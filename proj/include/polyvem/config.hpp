#pragma once

// Run configuration for the command-line driver: JSON parsing, merging with
// flags, and resolution into study specs.

#include "polyvem/common.hpp"
#include "polyvem/generate.hpp"
#include "polyvem/io.hpp"
#include "polyvem/study.hpp"

#include <json.hpp>

#include <fstream>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

namespace polyvem {

enum class Command { Mesh, Forward, Inverse };

inline std::optional<Command> parse_command(std::string_view s) {
    if (s == "mesh") return Command::Mesh;
    if (s == "forward") return Command::Forward;
    if (s == "inverse") return Command::Inverse;
    return std::nullopt;
}

/// Every field is optional so that a config file, a preset and command-line
/// flags can be layered. Keys in JSON match the long flag names.
struct RunConfig {
    std::optional<std::string> cmd;
    std::optional<std::string> preset;
    std::optional<std::string> mesh_kind;
    std::optional<int> levels;
    std::optional<int> n;
    std::optional<std::uint64_t> seed;
    std::optional<int> k;
    std::optional<std::string> coeffs;
    std::optional<std::string> source;
    std::optional<std::string> q;
    std::optional<std::string> measurements;
    std::optional<double> noise;
    std::optional<std::string> alpha;
    std::optional<std::vector<int>> probe_counts;
    std::optional<std::string> out;
    std::optional<std::string> dump;

    /// Fields set in `o` win.
    void merge(const RunConfig& o) {
        auto take = [](auto& dst, const auto& src) {
            if (src) dst = src;
        };
        take(cmd, o.cmd);
        take(preset, o.preset);
        take(mesh_kind, o.mesh_kind);
        take(levels, o.levels);
        take(n, o.n);
        take(seed, o.seed);
        take(k, o.k);
        take(coeffs, o.coeffs);
        take(source, o.source);
        take(q, o.q);
        take(measurements, o.measurements);
        take(noise, o.noise);
        take(alpha, o.alpha);
        take(probe_counts, o.probe_counts);
        take(out, o.out);
        take(dump, o.dump);
    }
};

inline RunConfig config_from_json(const nlohmann::json& j) {
    if (!j.is_object()) throw Error(ErrorCode::Parse, "config must be a JSON object");
    RunConfig c;
    try {
        for (const auto& [key, v] : j.items()) {
            if (key == "cmd") c.cmd = v.get<std::string>();
            else if (key == "preset") c.preset = v.get<std::string>();
            else if (key == "mesh-kind") c.mesh_kind = v.get<std::string>();
            else if (key == "levels") c.levels = v.get<int>();
            else if (key == "n") c.n = v.get<int>();
            else if (key == "seed") c.seed = v.get<std::uint64_t>();
            else if (key == "k") c.k = v.get<int>();
            else if (key == "coeffs") c.coeffs = v.get<std::string>();
            else if (key == "source") c.source = v.get<std::string>();
            else if (key == "q") c.q = v.get<std::string>();
            else if (key == "measurements") c.measurements = v.get<std::string>();
            else if (key == "noise") c.noise = v.get<double>();
            else if (key == "alpha") c.alpha = v.is_number() ? format_double("%.17g", v.get<double>()) : v.get<std::string>();
            else if (key == "probe-counts") c.probe_counts = v.get<std::vector<int>>();
            else if (key == "out") c.out = v.get<std::string>();
            else if (key == "dump") c.dump = v.get<std::string>();
            else throw Error(ErrorCode::Parse, "unknown config key: " + key);
        }
    } catch (const nlohmann::json::exception& e) {
        throw Error(ErrorCode::Parse, e.what());
    }
    return c;
}

inline nlohmann::json read_json_file(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw Error(ErrorCode::Parse, "cannot open " + path);
    try {
        return nlohmann::json::parse(in);
    } catch (const nlohmann::json::exception& e) {
        throw Error(ErrorCode::Parse, path + ": " + e.what());
    }
}

inline std::optional<Point> parse_delta(std::string_view s) {
    if (s.substr(0, 6) != "delta(" || s.back() != ')') return std::nullopt;
    std::istringstream in(std::string(s.substr(6, s.size() - 7)));
    double x = 0.0, y = 0.0;
    char comma = 0;
    if (!(in >> x >> comma >> y) || comma != ',') return std::nullopt;
    in >> std::ws;
    if (!in.eof()) return std::nullopt;
    return Point(x, y);
}

inline std::vector<std::string> forward_presets() { return {"academic", "pointload-voronoi", "pointload-distorted"}; }
inline std::vector<std::string> inverse_presets() { return {"pockets", "window", "points"}; }

inline void apply_family(FamilySpec& f, const RunConfig& c) {
    if (c.mesh_kind) {
        const auto kind = parse_mesh_kind(*c.mesh_kind);
        if (!kind) throw Error(ErrorCode::BadParams, "unknown mesh kind: " + *c.mesh_kind);
        if (*kind != f.kind) f.sizes.clear();
        f.kind = *kind;
    }
    if (c.levels) {
        if (*c.levels < 1) throw Error(ErrorCode::BadParams, "levels must be positive");
        f.levels = *c.levels;
    }
    if (c.n) {
        f.params.n = *c.n;
        f.sizes.clear();
    }
    if (c.seed) f.params.seed = *c.seed;
}

/// Both Q variants are run when q is "both".
struct ForwardRun {
    ForwardSpec spec;
    bool both = false;
};

inline ForwardRun resolve_forward(const RunConfig& c) {
    ForwardRun run;
    auto& s = run.spec;
    if (c.preset) {
        if (*c.preset == "academic") {
            s = presets::academic(QMode::PiK);
            run.both = true;
        } else if (*c.preset == "pointload-voronoi") {
            s = presets::pointload_voronoi();
        } else if (*c.preset == "pointload-distorted") {
            s = presets::pointload_distorted();
        } else {
            throw Error(ErrorCode::BadParams, "unknown forward preset: " + *c.preset);
        }
    } else {
        s.family.levels = 4;
    }
    apply_family(s.family, c);
    if (c.k) s.k = *c.k;
    if (c.coeffs) {
        if (*c.coeffs == "poisson") s.coeffs = CoefficientPreset::Poisson;
        else if (*c.coeffs == "academic") s.coeffs = CoefficientPreset::Academic;
        else throw Error(ErrorCode::BadParams, "unknown coefficient preset: " + *c.coeffs);
    }
    if (c.source) {
        if (*c.source == "sinsin") {
            s.source = SourcePreset::SinSin;
        } else if (*c.source == "zero") {
            s.source = SourcePreset::Zero;
        } else if (const auto p = parse_delta(*c.source)) {
            s.source = SourcePreset::Delta;
            s.delta = *p;
        } else {
            throw Error(ErrorCode::BadParams, "unknown source: " + *c.source);
        }
    }
    if (c.q) {
        if (*c.q == "both") {
            run.both = true;
        } else if (const auto q = parse_q_mode(*c.q)) {
            s.q = *q;
            run.both = false;
        } else {
            throw Error(ErrorCode::BadParams, "unknown q mode: " + *c.q);
        }
    }
    return run;
}

inline InverseSpec resolve_inverse(const RunConfig& c) {
    InverseSpec s;
    if (c.preset) {
        if (*c.preset == "pockets") s = presets::inverse_pockets();
        else if (*c.preset == "window") s = presets::inverse_window();
        else if (*c.preset == "points") s = presets::inverse_points();
        else throw Error(ErrorCode::BadParams, "unknown inverse preset: " + *c.preset);
    } else {
        s.family.levels = 4;
    }
    apply_family(s.family, c);
    if (c.k && *c.k != 1) throw Error(ErrorCode::BadParams, "the inverse solver uses k = 1");
    if (c.seed) s.noise_seed = *c.seed;
    if (c.measurements) s.measurements = io::measurements_from_json(read_json_file(*c.measurements));
    if (s.measurements.empty()) throw Error(ErrorCode::BadParams, "no measurements given");
    if (c.noise) {
        if (*c.noise < 0.0) throw Error(ErrorCode::BadParams, "noise must be non-negative");
        s.noise = *c.noise;
    }
    if (c.alpha) {
        if (*c.alpha == "auto") {
            s.alpha.reset();
        } else {
            std::size_t used = 0;
            double a = 0.0;
            try {
                a = std::stod(*c.alpha, &used);
            } catch (const std::exception&) {
                used = 0;
            }
            if (used != c.alpha->size() || !(a > 0.0)) throw Error(ErrorCode::BadParams, "alpha must be auto or positive");
            s.alpha = a;
        }
    }
    return s;
}

}  // namespace polyvem
