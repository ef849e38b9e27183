#include "polyvem/config.hpp"
#include "polyvem/io.hpp"

#include <gtest/gtest.h>

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <sys/wait.h>

using namespace polyvem;
namespace fs = std::filesystem;

namespace {

ErrorCode code_of(const std::function<void()>& f) {
    try {
        f();
    } catch (const Error& e) {
        return e.code();
    }
    ADD_FAILURE() << "no error thrown";
    return ErrorCode::NotNested;
}

fs::path scratch() {
    const auto dir = fs::temp_directory_path() / ("polyvem_cli_" + std::to_string(::getpid()));
    fs::create_directories(dir);
    return dir;
}

void write(const fs::path& p, const std::string& text) { std::ofstream(p) << text; }

std::string read(const fs::path& p) {
    std::ifstream in(p, std::ios::binary);
    std::stringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

int run(const std::string& args) {
    const std::string cmd = std::string(POLYVEM_CLI) + " " + args + " >/dev/null 2>&1";
    const int status = std::system(cmd.c_str());
    return WIFEXITED(status) ? WEXITSTATUS(status) : -1;
}

}  // namespace

TEST(Config, KnownKeys) {
    const auto c = config_from_json(nlohmann::json::parse(R"({"cmd": "forward", "levels": 3, "alpha": 1e-5, "probe-counts": [1, 3]})"));
    EXPECT_EQ(*c.cmd, "forward");
    EXPECT_EQ(*c.levels, 3);
    EXPECT_EQ(std::stod(*c.alpha), 1e-5);
    EXPECT_EQ(*c.probe_counts, (std::vector<int>{1, 3}));
    EXPECT_FALSE(c.k);
}

TEST(Config, UnknownKeyAndBadTypes) {
    EXPECT_EQ(code_of([] { config_from_json(nlohmann::json::parse(R"({"level": 3})")); }), ErrorCode::Parse);
    EXPECT_EQ(code_of([] { config_from_json(nlohmann::json::parse(R"({"levels": "three"})")); }), ErrorCode::Parse);
    EXPECT_EQ(code_of([] { config_from_json(nlohmann::json::parse("[1]")); }), ErrorCode::Parse);
}

TEST(Config, FlagsOverrideFile) {
    RunConfig file, flags;
    file.levels = 3;
    file.k = 2;
    flags.levels = 5;
    file.merge(flags);
    EXPECT_EQ(*file.levels, 5);
    EXPECT_EQ(*file.k, 2);
}

TEST(Config, DeltaSyntax) {
    EXPECT_EQ(*parse_delta("delta(0.1,0.25)"), Point(0.1, 0.25));
    EXPECT_EQ(*parse_delta("delta(0.1, 0.25)"), Point(0.1, 0.25));
    EXPECT_FALSE(parse_delta("delta(0.1)"));
    EXPECT_FALSE(parse_delta("delta(0.1,0.2)x"));
    EXPECT_FALSE(parse_delta("delta(0.1,0.2,0.3)"));
    EXPECT_FALSE(parse_delta("sinsin"));
}

TEST(Config, ResolveForward) {
    RunConfig c;
    c.preset = "academic";
    auto run = resolve_forward(c);
    EXPECT_TRUE(run.both);
    c.q = "j";
    c.source = "delta(0.2,0.3)";
    c.levels = 2;
    run = resolve_forward(c);
    EXPECT_FALSE(run.both);
    EXPECT_EQ(run.spec.q, QMode::J);
    EXPECT_EQ(run.spec.source, SourcePreset::Delta);
    EXPECT_EQ(run.spec.family.levels, 2);
    c.source = "gauss";
    EXPECT_EQ(code_of([&] { resolve_forward(c); }), ErrorCode::BadParams);
}

TEST(Config, ResolveInverse) {
    RunConfig c;
    EXPECT_EQ(code_of([&] { resolve_inverse(c); }), ErrorCode::BadParams);
    c.preset = "pockets";
    c.alpha = "1e-5";
    EXPECT_EQ(*resolve_inverse(c).alpha, 1e-5);
    c.alpha = "auto";
    EXPECT_FALSE(resolve_inverse(c).alpha);
    for (const char* bad : {"0", "-1", "1e-5x", "big"}) {
        c.alpha = bad;
        EXPECT_EQ(code_of([&] { resolve_inverse(c); }), ErrorCode::BadParams) << bad;
    }
    c.alpha.reset();
    c.k = 2;
    EXPECT_EQ(code_of([&] { resolve_inverse(c); }), ErrorCode::BadParams);
}

TEST(MeasurementsJson, AllEntryKinds) {
    const auto specs = io::measurements_from_json(nlohmann::json::parse(R"({"measurements": [
        {"type": "average", "cells": [1, 2]},
        {"type": "average", "box": [[0.2, 0.6], [0.4, 0.8]]},
        {"type": "point", "xy": [0.5, 0.25]}]})"));
    ASSERT_EQ(specs.size(), 3u);
    EXPECT_EQ(specs[0].kind, MeasurementSpec::Kind::AverageCells);
    EXPECT_EQ(specs[0].cells, (std::vector<int>{1, 2}));
    EXPECT_EQ(specs[1].hi, Point(0.4, 0.8));
    EXPECT_EQ(specs[2].point, Point(0.5, 0.25));
    for (const auto& s : specs) {
        const auto back = io::measurements_from_json(nlohmann::json::array({io::to_json(s)}));
        EXPECT_EQ(io::to_json(back[0]), io::to_json(s));
    }
    EXPECT_EQ(code_of([] { io::measurements_from_json(nlohmann::json::parse(R"([{"type": "flux"}])")); }), ErrorCode::Parse);
    EXPECT_EQ(code_of([] { io::measurements_from_json(nlohmann::json::parse(R"([{"type": "point"}])")); }), ErrorCode::Parse);
}

TEST(MeshJson, RoundTrip) {
    GenerateParams p;
    p.n = 12;
    p.seed = 5;
    const auto mesh = generate(MeshKind::VoronoiLloyd, p);
    const auto back = io::mesh_from_json(nlohmann::json::parse(io::to_json(mesh).dump()));
    EXPECT_EQ(back.num_cells(), mesh.num_cells());
    EXPECT_EQ(io::to_json(back), io::to_json(mesh));
}

TEST(Cli, ExitCodes) {
    const auto dir = scratch();
    write(dir / "unknown.json", R"({"cmd": "forward", "colour": 1})");
    write(dir / "broken.json", R"({"cmd": )");
    write(dir / "empty.json", R"({"measurements": []})");
    EXPECT_EQ(run("--cmd mesh --mesh-kind uniform_square --n 2 --out " + (dir / "m.json").string()), 0);
    EXPECT_EQ(run("--cmd forward --n 2 --levels 2 --source zero"), 0);
    EXPECT_EQ(run("--config " + (dir / "unknown.json").string()), 2);
    EXPECT_EQ(run("--config " + (dir / "broken.json").string()), 2);
    EXPECT_EQ(run("--cmd inverse --n 2 --levels 1 --measurements " + (dir / "empty.json").string()), 2);
    EXPECT_EQ(run("--cmd inverse --n 2 --levels 1 --measurements " + (dir / "missing.json").string()), 2);
    EXPECT_EQ(run("--cmd forward --n 2 --levels 1 --k 3"), 1);
    EXPECT_EQ(run("--cmd forward --levels many"), 2);
    EXPECT_EQ(run("--cmd sideways"), 2);
    EXPECT_EQ(run("--cmd mesh --mesh-kind hexagons"), 2);
    fs::remove_all(dir);
}

TEST(Cli, MeshOutputIsDeterministic) {
    const auto dir = scratch();
    const std::string args = "--cmd mesh --mesh-kind voronoi_lloyd --n 40 --seed 3 --out ";
    ASSERT_EQ(run(args + (dir / "a.json").string()), 0);
    ASSERT_EQ(run(args + (dir / "b.json").string()), 0);
    const std::string a = read(dir / "a.json");
    EXPECT_FALSE(a.empty());
    EXPECT_EQ(a, read(dir / "b.json"));
    EXPECT_EQ(io::mesh_from_json(nlohmann::json::parse(a)).num_cells(), 40);
    fs::remove_all(dir);
}

TEST(Cli, InverseWritesCsvAndDump) {
    const auto dir = scratch();
    write(dir / "m.json", R"([{"type": "average", "box": [[0.25, 0.25], [0.75, 0.75]]}, {"type": "point", "xy": [0.3, 0.6]}])");
    ASSERT_EQ(run("--cmd inverse --n 4 --levels 2 --noise 0.01 --measurements " + (dir / "m.json").string() + " --out " +
                  (dir / "t.csv").string() + " --dump " + (dir / "d.json").string()),
              0);
    const std::string csv = read(dir / "t.csv");
    EXPECT_EQ(csv.substr(0, csv.find('\n')), "level,h,ndof,errm,ratem,err1f,err0f,err1fh,rate1fh,err0fh,rate0fh,alpha,probe");
    EXPECT_EQ(std::count(csv.begin(), csv.end(), '\n'), 3);
    const auto dump = nlohmann::json::parse(read(dir / "d.json"));
    EXPECT_TRUE(dump.contains("mesh"));
    fs::remove_all(dir);
}
