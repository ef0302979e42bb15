#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <filesystem>
#include <fstream>
#include <sstream>

#include <json.hpp>

#include "fixtures.hpp"
#include "synthval/cli.hpp"
#include "synthval/csv.hpp"
#include "synthval/upca.hpp"

using namespace synthval;
namespace fs = std::filesystem;

namespace {

struct Run {
    int code = 0;
    std::string out;
    std::string err;
};

Run run(const std::vector<std::string>& args) {
    std::ostringstream out;
    std::ostringstream err;
    Run r;
    r.code = dispatch(args, out, err);
    r.out = out.str();
    r.err = err.str();
    return r;
}

fs::path scratch() {
    const fs::path dir = fs::temp_directory_path() / "synthval_test_cli";
    fs::create_directories(dir);
    return dir;
}

nlohmann::json read(const fs::path& p) {
    std::ifstream in(p);
    return nlohmann::json::parse(in);
}

}  // namespace

TEST_CASE("usage errors exit with 2") {
    CHECK(run({"frobnicate"}).code == 2);
    CHECK(run({}).code == 2);
    CHECK(run({"generate", "--method", "bootstrap"}).code == 2);
    CHECK(run({"--help"}).code == 0);
}

TEST_CASE("stage failures exit with 1 and a JSON error") {
    const Run r = run({"generate", "--method", "bootstrap", (scratch() / "missing.csv"),
                       (scratch() / "out.csv")});
    CHECK(r.code == 1);
    const auto j = nlohmann::json::parse(r.err);
    CHECK(j["error"].contains("type"));
    CHECK(j["error"].contains("message"));
}

TEST_CASE("evaluating a table against itself gives zero distances") {
    const fs::path out = scratch() / "self.json";
    const std::string data = fixtures::data_path("diabetes.csv");
    const Run r = run({"evaluate", "--out", out.string(), data, data});
    REQUIRE(r.code == 0);
    const auto j = read(out);
    CHECK(j["metrics"]["hellinger"].get<double>() == 0.0);
    CHECK(j["metrics"]["pcd"].get<double>() == 0.0);
    CHECK(j.contains("config"));
}

TEST_CASE("generate, impute and sidecars") {
    const fs::path dir = scratch();
    const std::string data = fixtures::data_path("titanic.csv");
    REQUIRE(run({"generate", "--method", "seqcart", "--seed", "3", "--n", "50", data, (dir / "s.csv")}).code == 0);
    CHECK(load_csv(dir / "s.csv").n_rows() == 50);
    CHECK(fs::exists(dir / "s.csv.config.json"));
    REQUIRE(run({"impute", "--method", "si", data, (dir / "i.csv")}).code == 0);
    CHECK_FALSE(load_csv(dir / "i.csv").has_missing());
    REQUIRE(run({"impute-compare", "--repeats", "1", data, (dir / "c.csv")}).code == 0);
    CHECK(load_csv(dir / "c.csv").n_rows() == 3);
}

TEST_CASE("fit-upca then score the corpus mean gives zero") {
    const fs::path dir = scratch();
    {
        std::ofstream corpus(dir / "corpus.jsonl");
        for (int i = 0; i < 10; ++i) {
            const MetricVector m{0.1 * i, 0.5 + 0.05 * i * i, -3.0 + 0.2 * (i % 3), 0.01 * i + 0.002 * (i % 2)};
            if (i % 2) corpus << nlohmann::json{{"metrics", m.to_json()}}.dump() << "\n";
            else corpus << m.to_json().dump() << "\n";
        }
    }
    REQUIRE(run({"fit-upca", "--out", (dir / "model.json").string(), (dir / "corpus.jsonl").string()}).code == 0);
    const auto model = UpcaModel::load(dir / "model.json");
    CHECK(model.corpus_size == 10);
    {
        std::ofstream m(dir / "mean.json");
        m << MetricVector::from_array(model.means).to_json().dump();
    }
    const Run r = run({"score", "--model", (dir / "model.json").string(), (dir / "mean.json").string()});
    REQUIRE(r.code == 0);
    CHECK(std::stod(r.out) == doctest::Approx(0.0).epsilon(1e-12));
}
