#include "polyvem/config.hpp"
#include "polyvem/io.hpp"
#include "polyvem/study.hpp"

#include <CLI11.hpp>

#include <cstdio>
#include <fstream>
#include <iostream>

using namespace polyvem;

namespace {

constexpr int kExitModule = 1;
constexpr int kExitUsage = 2;

void emit(const std::optional<std::string>& path, const std::string& text) {
    if (!path || *path == "-") {
        std::cout << text;
        return;
    }
    std::ofstream out(*path, std::ios::binary);
    if (!out) throw Error(ErrorCode::Parse, "cannot write " + *path);
    out << text;
}

int cmd_mesh(const RunConfig& c) {
    FamilySpec f;
    apply_family(f, c);
    const auto meshes = build_family(f);
    const auto& mesh = meshes.back();
    const auto report = validate(mesh);
    emit(c.out, io::to_json(mesh).dump() + "\n");
    std::cerr << io::to_json(report, mesh).dump() << "\n";
    if (!report.all_star_shaped()) {
        std::cerr << "error: mesh has cells that are not star-shaped with respect to a ball\n";
        return kExitModule;
    }
    return 0;
}

int cmd_forward(const RunConfig& c) {
    auto run = resolve_forward(c);
    if (run.both) {
        run.spec.q = QMode::PiK;
        const auto pik = run_forward(run.spec);
        run.spec.q = QMode::J;
        const auto j = run_forward(run.spec);
        emit(c.out, forward_csv(pik, j));
    } else {
        emit(c.out, forward_csv(run_forward(run.spec)));
    }
    return 0;
}

int cmd_inverse(const RunConfig& c) {
    const auto spec = resolve_inverse(c);
    if (c.probe_counts) {
        emit(c.out, probe_csv(run_probe_sweep(spec, *c.probe_counts)));
        return 0;
    }
    std::optional<InverseDump> dump;
    const auto rows = run_inverse(spec, c.dump ? &dump : nullptr);
    emit(c.out, inverse_csv(rows));
    if (c.dump) emit(c.dump, io::to_json(*dump).dump() + "\n");
    return 0;
}

bool is_usage_error(ErrorCode code) { return code == ErrorCode::Parse || code == ErrorCode::BadParams; }

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Virtual element solver for elliptic problems with rough sources and inverse source reconstruction"};
    RunConfig flags;
    std::optional<std::string> config_path;
    app.add_option("--cmd", flags.cmd, "mesh, forward or inverse");
    app.add_option("--config", config_path, "JSON config; keys are the long flag names");
    app.add_option("--preset", flags.preset,
                   "forward: academic, pointload-voronoi, pointload-distorted; inverse: pockets, window, points");
    app.add_option("--mesh-kind", flags.mesh_kind,
                   "uniform_square, distorted_square, red_refined_quad, nonconvex_pattern, voronoi_lloyd");
    app.add_option("--levels", flags.levels, "number of mesh levels");
    app.add_option("--n", flags.n, "size of level 0 (squares per side or Voronoi sites)");
    app.add_option("--seed", flags.seed, "mesh and noise seed");
    app.add_option("--k", flags.k, "polynomial degree (1 or 2)");
    app.add_option("--coeffs", flags.coeffs, "poisson or academic");
    app.add_option("--source", flags.source, "sinsin, zero or delta(x,y)");
    app.add_option("--q", flags.q, "pik, j or both");
    app.add_option("--measurements", flags.measurements, "measurement JSON file");
    app.add_option("--noise", flags.noise, "relative noise level ||n|| / ||m||");
    app.add_option("--alpha", flags.alpha, "regularization parameter or auto");
    app.add_option("--probe-counts", flags.probe_counts, "measurement counts for the probe table")->delimiter(',');
    app.add_option("--out", flags.out, "output path (default stdout)");
    app.add_option("--dump", flags.dump, "write the finest reconstruction as JSON");

    try {
        app.parse(argc, argv);
    } catch (const CLI::CallForHelp& e) {
        return app.exit(e);
    } catch (const CLI::ParseError& e) {
        app.exit(e);
        return kExitUsage;
    }

    try {
        RunConfig cfg;
        if (config_path) cfg = config_from_json(read_json_file(*config_path));
        cfg.merge(flags);
        if (!cfg.cmd) throw Error(ErrorCode::BadParams, "--cmd is required");
        const auto cmd = parse_command(*cfg.cmd);
        if (!cmd) throw Error(ErrorCode::BadParams, "unknown command: " + *cfg.cmd);
        switch (*cmd) {
            case Command::Mesh: return cmd_mesh(cfg);
            case Command::Forward: return cmd_forward(cfg);
            case Command::Inverse: return cmd_inverse(cfg);
        }
    } catch (const Error& e) {
        std::cerr << "error: " << e.what() << "\n";
        return is_usage_error(e.code()) ? kExitUsage : kExitModule;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return kExitModule;
    }
    return 0;
}
