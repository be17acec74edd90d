#include <catch2/catch_amalgamated.hpp>

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>

#include "csra/sweep.hpp"

using namespace csra;
namespace fs = std::filesystem;

namespace {

fs::path fresh_dir(const std::string& name) {
    const fs::path dir = fs::temp_directory_path() / ("csra_sweep_" + name);
    fs::remove_all(dir);
    fs::create_directories(dir);
    return dir;
}

std::vector<std::vector<std::string>> read_csv(const fs::path& path) {
    std::ifstream in(path);
    REQUIRE(in.good());
    std::vector<std::vector<std::string>> rows;
    std::string line;
    while (std::getline(in, line)) {
        if (line.empty() || line[0] == '#') continue;
        std::vector<std::string> cells;
        std::stringstream ss(line);
        std::string cell;
        while (std::getline(ss, cell, ',')) cells.push_back(cell);
        rows.push_back(cells);
    }
    return rows;
}

SweepSpec tiny_spec() {
    std::istringstream in(
        "M = 2\n"
        "p_act = 0.5\n"
        "q = 8\n"
        "batch = 8\n"
        "S = 32\n"
        "horizon = 600\n"
        "seed = 3\n"
        "sweep_key = K\n"
        "sweep_values = 2 3\n"
        "replications = 3\n");
    return parse_sweep(in);
}

}  // namespace

TEST_CASE("sweep file parsing", "[sweep]") {
    SweepSpec spec = tiny_spec();
    CHECK(spec.key == "K");
    CHECK(spec.values == std::vector<double>{2.0, 3.0});
    CHECK(spec.replications == 3);
    CHECK(spec.base.M == 2);

    std::istringstream missing("K = 3\nsweep_values = 1 2\n");
    CHECK_THROWS_AS(parse_sweep(missing), ConfigError);
    std::istringstream bad_key("sweep_key = D\nsweep_values = 1\n");
    CHECK_THROWS_AS(parse_sweep(bad_key), ConfigError);
    std::istringstream unknown("sweep_key = K\nsweep_values = 1\nwat = 9\n");
    CHECK_THROWS_AS(parse_sweep(unknown), ConfigError);
}

TEST_CASE("replication seeds are unique and reproducible", "[sweep]") {
    std::set<std::uint64_t> seen;
    for (int rep = 0; rep < 4; ++rep)
        for (PolicyKind p : {PolicyKind::Dnn, PolicyKind::Mab, PolicyKind::Rch})
            for (double v : {10.0, 20.0})
                seen.insert(derive_sweep_seed(7, "K", v, p, rep));
    CHECK(seen.size() == 4 * 3 * 2);
    CHECK(derive_sweep_seed(7, "K", 10.0, PolicyKind::Dnn, 2) ==
          derive_sweep_seed(7, "K", 10.0, PolicyKind::Dnn, 2));
}

TEST_CASE("sweep produces one raw row per (value, policy, replication)", "[sweep]") {
    const fs::path dir = fresh_dir("rows");
    SweepSpec spec = tiny_spec();
    auto rows = run_sweep(spec, 2, dir.string());
    CHECK(rows.size() == 2 * 3 * 3);

    const auto raw = read_csv(dir / "raw.csv");
    REQUIRE(raw.size() == 1 + 18);  // header + rows
    CHECK(raw[0][0] == "sweep_key");

    const auto agg = read_csv(dir / "aggregated.csv");
    REQUIRE(agg.size() == 1 + 6);  // header + 2 values x 3 policies
    for (std::size_t i = 1; i < agg.size(); ++i) CHECK(agg[i][3] == "3");  // n column

    // per-point files merged away on success
    CHECK_FALSE(fs::exists(dir / "point_0.csv"));
    CHECK_FALSE(fs::exists(dir / "error_manifest.txt"));
}

TEST_CASE("independent aggregation script reproduces the aggregate", "[sweep]") {
    const fs::path dir = fresh_dir("agg");
    SweepSpec spec = tiny_spec();
    run_sweep(spec, 2, dir.string());

    const fs::path script = fs::path(CSRA_SOURCE_DIR) / "scripts" / "aggregate.py";
    const fs::path out = dir / "agg_py.csv";
    const std::string cmd = "python3 " + script.string() + " " + (dir / "raw.csv").string() +
                            " -o " + out.string();
    REQUIRE(std::system(cmd.c_str()) == 0);

    const auto ours = read_csv(dir / "aggregated.csv");
    const auto theirs = read_csv(out);
    REQUIRE(ours.size() == theirs.size());
    for (std::size_t r = 1; r < ours.size(); ++r) {
        REQUIRE(ours[r].size() == theirs[r].size());
        for (std::size_t c = 0; c < ours[r].size(); ++c) {
            if (c < 4) {
                CHECK(ours[r][c] == theirs[r][c]);
            } else {
                CHECK(std::stod(ours[r][c]) ==
                      Catch::Approx(std::stod(theirs[r][c])).margin(1e-9));
            }
        }
    }
}

TEST_CASE("failed points leave a manifest and partial results", "[sweep]") {
    const fs::path dir = fresh_dir("fail");
    SweepSpec spec = tiny_spec();
    spec.key = "M";
    spec.values = {2.0, 0.0};  // M = 0 cannot be validated
    CHECK_THROWS_AS(run_sweep(spec, 2, dir.string()), SweepError);
    CHECK(fs::exists(dir / "error_manifest.txt"));
    const auto raw = read_csv(dir / "raw.csv");
    CHECK(raw.size() == 1 + 9);  // the valid value's rows survived
}
