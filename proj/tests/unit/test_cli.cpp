#include <doctest.h>

#include <filesystem>
#include <fstream>
#include <sstream>

#include "mwqed/cli.hpp"
#include "mwqed/errors.hpp"

using namespace mwqed;
using namespace mwqed::cli;
namespace fs = std::filesystem;

namespace {

fs::path scratch(const std::string& name) {
    const fs::path p = fs::temp_directory_path() / ("mwqed_unit_" + name);
    fs::remove_all(p);
    fs::create_directories(p);
    return p;
}

std::string slurp(const fs::path& p) {
    std::ifstream in(p, std::ios::binary);
    std::stringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

void put(const fs::path& p, const std::string& s) { std::ofstream(p, std::ios::binary) << s; }

int run_mode(const std::string& mode, const fs::path& cfg, const fs::path& out, bool figures = true) {
    RunOptions o;
    o.subcommand = mode;
    o.config_path = cfg.string();
    o.out_dir = out.string();
    o.figures = figures;
    return run(o);
}

const char* small_evolve = R"({"mode": "evolve", "model": {"sites": 3, "time_points": 11, "box_length_sites": 100},
  "drive": {"pulse_ms": 0.05}, "output": {"snapshots": 2, "z_points": 41}})";

}  // namespace

TEST_SUITE("cli") {

TEST_CASE("number formatting") {
    CHECK(format_number(0.0) == "0");
    CHECK(format_number(-0.0) == "0");
    CHECK(format_number(0.1, 12) == "0.1");
    CHECK(format_number(1.0 / 3.0, 6) == "0.333333");
    CHECK(format_number(1e-20, 12) == "1e-20");
    CHECK(format_number(std::nan("")) == "nan");
}

TEST_CASE("CSV round trip") {
    Csv c({"a", "b"}, 12);
    c.row({1.5, -2e-7});
    c.row({0.0, 3.0});
    const auto t = parse_csv("# comment\n" + c.str());
    CHECK(t.header == std::vector<std::string>{"a", "b"});
    CHECK(t.values("b")[0] == doctest::Approx(-2e-7));
    CHECK(t.column("z") == -1);
    CHECK_THROWS_AS(parse_csv("a,b\n1\n"), ConfigError);
    CHECK_THROWS_AS(c.row({1.0}), std::logic_error);
}

TEST_CASE("sha256") {
    CHECK(sha256_hex("abc") == "ba7816bf8f01cfea414140de5dae2223b00361a396177a9cb410ff61f20015ad");
}

TEST_CASE("config schema") {
    const auto cfg = resolve_config(Json::object(), "rates");
    CHECK(cfg["lattice"]["s_z"].get<double>() == 8.0);
    CHECK_FALSE(cfg.contains("sweep"));
    CHECK(resolve_config(Json::object(), "sweep").contains("sweep"));

    auto pointer_of = [](const Json& j, const std::string& mode) {
        try {
            resolve_config(j, mode);
        } catch (const ConfigError& e) {
            return e.pointer();
        }
        return std::string("none");
    };
    CHECK(pointer_of(Json::parse(R"({"drive": {"omega": 1}})"), "rates") == "/drive/omega");
    CHECK(pointer_of(Json::parse(R"({"model": {"sites": 0}})"), "evolve") == "/model/sites");
    CHECK(pointer_of(Json::parse(R"({"model": {"q_grid": 100}})"), "evolve") == "/model/q_grid");
    CHECK(pointer_of(Json::parse(R"({"mode": "sweep"})"), "rates") == "/mode");
    CHECK(pointer_of(Json::parse(R"({"master": {"register": ["sup", "x"]}})"), "master") == "/master/register/1");
    CHECK(pointer_of(Json::parse(R"({"schema_version": 9})"), "rates") == "/schema_version");
}

TEST_CASE("exit codes") {
    const auto dir = scratch("exit");
    put(dir / "bad.json", "{ not json");
    CHECK(run_mode("rates", dir / "bad.json", dir / "out_bad") == exit_config);
    CHECK_FALSE(fs::exists(dir / "out_bad"));

    put(dir / "unknown.json", R"({"lattice": {"depth": 3}})");
    CHECK(run_mode("rates", dir / "unknown.json", dir / "out_unknown") == exit_config);
    CHECK_FALSE(fs::exists(dir / "out_unknown"));

    // continuum edge: golden-rule rate undefined
    put(dir / "edge.json", R"({"drive": {"delta_over_omega_r": 0}})");
    CHECK(run_mode("rates", dir / "edge.json", dir / "out_edge") == exit_physics);
    const auto m = Json::parse(slurp(dir / "out_edge" / "manifest.json"));
    CHECK(m["status"] == "error");
    CHECK(m["outputs"].empty());
}

TEST_CASE("repeat runs are byte-identical and replay from the manifest") {
    const auto dir = scratch("determinism");
    put(dir / "cfg.json", small_evolve);
    REQUIRE(run_mode("evolve", dir / "cfg.json", dir / "a") == exit_ok);
    REQUIRE(run_mode("evolve", dir / "cfg.json", dir / "b") == exit_ok);
    const auto ma = Json::parse(slurp(dir / "a" / "manifest.json"));
    REQUIRE(ma["outputs"].contains("evolve.csv"));
    for (const auto& [name, _] : ma["outputs"].items()) CHECK(slurp(dir / "a" / name) == slurp(dir / "b" / name));
    CHECK(slurp(dir / "a" / "manifest.json") == slurp(dir / "b" / "manifest.json"));

    // the manifest is itself a valid config
    REQUIRE(run_mode("evolve", dir / "a" / "manifest.json", dir / "c") == exit_ok);
    const auto mc = Json::parse(slurp(dir / "c" / "manifest.json"));
    CHECK(mc["outputs"] == ma["outputs"]);
    CHECK(ma["outputs"]["evolve.csv"]["sha256"] == sha256_hex(slurp(dir / "a" / "evolve.csv")));
}

TEST_CASE("render warns on an empty directory") {
    const auto dir = scratch("render");
    fs::create_directories(dir / "empty");
    put(dir / "cfg.json", R"({"mode": "render", "render": {"input_dir": "empty"}})");
    REQUIRE(run_mode("render", dir / "cfg.json", dir / "out") == exit_ok);
    const auto m = Json::parse(slurp(dir / "out" / "manifest.json"));
    bool found = false;
    for (const auto& w : m["warnings"]) found |= w.get<std::string>().find("no gridded data") != std::string::npos;
    CHECK(found);
}

TEST_CASE("figures can be disabled") {
    const auto dir = scratch("nofig");
    put(dir / "cfg.json", small_evolve);
    REQUIRE(run_mode("evolve", dir / "cfg.json", dir / "out", false) == exit_ok);
    CHECK_FALSE(fs::exists(dir / "out" / "evolve.png"));
    CHECK(fs::exists(dir / "out" / "evolve.csv"));
}

}
