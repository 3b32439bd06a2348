#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>
#include <vector>

#include "commands.hpp"
#include "config.hpp"
#include "doctest.h"

namespace fs = std::filesystem;

namespace {

struct Result {
    int code;
    std::string out;
    std::string err;
};

Result run(std::vector<std::string> args) {
    args.insert(args.begin(), "cascade");
    std::vector<const char*> argv;
    for (const auto& a : args) argv.push_back(a.c_str());
    std::ostringstream out, err;
    const int code = cascade::cli::run(static_cast<int>(argv.size()), argv.data(), out, err);
    return {code, out.str(), err.str()};
}

fs::path scratch(const std::string& name) {
    const auto dir = fs::temp_directory_path() / ("cascade_cli_test_" + name);
    fs::remove_all(dir);
    fs::create_directories(dir);
    return dir;
}

std::string write(const fs::path& path, const std::string& text) {
    std::ofstream(path) << text;
    return path.string();
}

std::string slurp(const fs::path& path) {
    std::ifstream in(path);
    std::stringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

std::vector<std::string> lines(const std::string& s) {
    std::vector<std::string> out;
    std::stringstream ss(s);
    for (std::string l; std::getline(ss, l);) out.push_back(l);
    return out;
}

const char* two_stage = R"({"params": {"J": 10, "forward": [1, 1], "backward": [1, 1], "product": 0.1}})";
const char* reduced = R"({"params": {"J": 10, "kappa_M": 0.15, "kappa_P": 0.1}, "T": 2})";

}  // namespace

TEST_CASE("stationary weights of the two-stage example") {
    const auto dir = scratch("stationary");
    const auto cfg = write(dir / "c.json", two_stage);
    const auto r = run({"stationary", "--config", cfg, "--zs", "1.0"});
    REQUIRE(r.code == 0);
    const auto ls = lines(r.out);
    CHECK(ls[0].rfind("# cascade ", 0) == 0);
    CHECK(ls[3] == "i,a_i,p_i");
    double p1 = 0, p2 = 0;
    std::sscanf(ls[4].c_str(), "1,%*[^,],%lf", &p1);
    std::sscanf(ls[5].c_str(), "2,%*[^,],%lf", &p2);
    CHECK(p1 == doctest::Approx(1.0 / 3.0).epsilon(1e-12));
    CHECK(p2 == doctest::Approx(10.0 / 33.0).epsilon(1e-12));
}

TEST_CASE("poisson coefficients and residual line") {
    const auto dir = scratch("poisson");
    const auto cfg = write(dir / "c.json", two_stage);
    const auto r = run({"poisson", "--config", cfg, "--zs", "1"});
    REQUIRE(r.code == 0);
    CHECK(r.out.find("# residual_max=") != std::string::npos);
    CHECK(r.out.find("i,b1_i,b2_i\n1,0.9696969696969") != std::string::npos);
}

TEST_CASE("reduce from zero substrate is constant") {
    const auto dir = scratch("reduce");
    const auto cfg = write(dir / "c.json", reduced);
    const auto r = run({"reduce", "--config", cfg, "--zs0", "0", "--points", "5"});
    REQUIRE(r.code == 0);
    const auto ls = lines(r.out);
    REQUIRE(ls.size() == 7);
    CHECK(ls[1] == "t,z_s,z_p");
    for (std::size_t i = 2; i < ls.size(); ++i) CHECK(ls[i].substr(ls[i].find(',')) == ",0,0");
}

TEST_CASE("outputs are reproducible and carry provenance") {
    const auto dir = scratch("repro");
    const auto cfg = write(dir / "c.json", two_stage);
    const std::vector<std::string> args{"simulate-ssa", "--config", cfg, "--n", "100", "--T", "0.5",
                                        "--reps", "3", "--seed", "17", "--points", "6"};
    const auto a = run(args), b = run(args);
    REQUIRE(a.code == 0);
    CHECK(a.out == b.out);
    CHECK(lines(a.out)[0].find("seed=17") != std::string::npos);
    CHECK(lines(a.out)[2] == "t,rep,z_c_1,z_c_2,z_s,z_p");
    CHECK(lines(a.out).size() == 3 + 3 * 6);

    auto threaded = args;
    threaded.insert(threaded.end(), {"--threads", "3"});
    CHECK(run(threaded).out == a.out);

    auto other = args;
    other[10] = "18";
    CHECK(run(other).out != a.out);
}

TEST_CASE("estimation round trip through files") {
    const auto dir = scratch("fit");
    const auto cfg = write(dir / "c.json", reduced);
    const auto out = (dir / "o").string();
    REQUIRE(run({"sample-taus", "--config", cfg, "--n", "5000", "--K", "300", "--out", out}).code == 0);
    const auto taus = slurp(dir / "o" / "taus.csv");
    CHECK(lines(taus)[1] == "# T=2");
    CHECK(lines(taus)[2] == "idx,t");

    const auto taus_path = (dir / "o" / "taus.csv").string();
    const auto mle = run({"fit-mle", "--config", cfg, "--data", taus_path, "--out", out, "--starts", "4"});
    REQUIRE(mle.code == 0);
    const auto j = nlohmann::json::parse(slurp(dir / "o" / "mle.json"));
    CHECK(j["names"] == nlohmann::json::array({"kappa_M", "kappa_P"}));
    CHECK(j["theta"][0].get<double>() == doctest::Approx(0.15).epsilon(0.5));
    CHECK(j["K"] == 300);

    const auto bayes = run({"fit-bayes", "--config", cfg, "--data", taus_path, "--out", out, "--burn-in", "200",
                            "--samples", "500", "--starts", "2"});
    REQUIRE(bayes.code == 0);
    const auto chain = lines(slurp(dir / "o" / "chain.csv"));
    CHECK(chain[2] == "iter,logpost,param_1,param_2");
    CHECK(chain.size() == 3 + 500);
    const auto post = nlohmann::json::parse(slurp(dir / "o" / "posterior.json"));
    CHECK(post["acceptance_rate"].get<double>() > 0.0);

    const auto kde = run({"kde", "--in", (dir / "o" / "chain.csv").string(), "--column", "param_2"});
    REQUIRE(kde.code == 0);
    CHECK(lines(kde.out)[4] == "x,density");

    const auto raw = run({"fit-mle", "--config", write(dir / "raw.json", R"({"params": {"J": 10, "forward": [1],
        "backward": [0.05], "product": 0.1}, "fit": "raw:1"})"), "--data", taus_path, "--starts", "2"});
    REQUIRE(raw.code == 0);
    CHECK(nlohmann::json::parse(raw.out)["names"] == nlohmann::json::array({"kappa_-1"}));
}

TEST_CASE("chaos report fields") {
    const auto dir = scratch("ips");
    const auto cfg = write(dir / "c.json", reduced);
    const auto r = run({"ips", "--config", cfg, "--n", "300", "--reps", "100", "--out", (dir / "o").string()});
    REQUIRE(r.code == 0);
    const auto j = nlohmann::json::parse(slurp(dir / "o" / "chaos.json"));
    for (const char* k : {"survival_sup_dist", "pair_corr", "stderr_survival", "stderr_pair_corr"})
        CHECK(j.contains(k));
    CHECK(lines(slurp(dir / "o" / "conversions.csv"))[2] == "idx,t");
}

TEST_CASE("exit codes") {
    const auto dir = scratch("errors");
    CHECK(run({}).code == 1);
    CHECK(run({"stationary", "--no-such-flag"}).code == 1);
    CHECK(run({"stationary", "--help"}).code == 0);

    const auto bad_field = run({"stationary", "--config", write(dir / "a.json", R"({"params": {"J": 10, "forward": [1],
        "backward": [1], "product": 0.1}, "bogus": 3})")});
    CHECK(bad_field.code == 1);
    CHECK(bad_field.err.find("'bogus'") != std::string::npos);

    const auto bad_type = run({"stationary", "--config", write(dir / "b.json", R"({"params": {"J": "ten"}})")});
    CHECK(bad_type.code == 1);
    CHECK(bad_type.err.find("params.J") != std::string::npos);

    CHECK(run({"stationary", "--config", write(dir / "c.json", "{not json")}).code == 1);
    CHECK(run({"stationary", "--config", (dir / "missing.json").string()}).code == 1);
    const auto neg = run({"stationary", "--config", write(dir / "d.json", R"({"params": {"J": 2, "forward": [-1],
        "backward": [1], "product": 0.1}})")});
    CHECK(neg.code == 1);
    CHECK(run({"fit-mle", "--config", write(dir / "e.json", reduced)}).code == 1);

    // every hazard in the box underflows to zero: no optimizer start can converge
    const auto taus = write(dir / "t.csv", "# T=1\nt\n0.5\n");
    const auto numerical = run({"fit-mle", "--config", write(dir / "f.json", R"({"params": {"J": 1, "kappa_M": 1,
        "kappa_P": 1}, "bounds": {"lower": [1e200, 1e-200], "upper": [2e200, 2e-200]}})"), "--data", taus,
        "--starts", "2"});
    CHECK(numerical.code == 2);
}

TEST_CASE("fit spec parsing") {
    using cascade::cli::parse_fit_spec;
    CHECK(parse_fit_spec("kappa_M,kappa_P").free == std::vector<std::size_t>{0, 1});
    CHECK(parse_fit_spec("kappa_P").free == std::vector<std::size_t>{1});
    const auto raw = parse_fit_spec("raw:0,4");
    CHECK(raw.parameterization == cascade::Parameterization::raw);
    CHECK(raw.free == std::vector<std::size_t>{0, 4});
    CHECK_THROWS_AS(parse_fit_spec("raw:x"), cascade::ValidationError);
    CHECK_THROWS_AS(parse_fit_spec("raw:1,1"), cascade::ValidationError);
    CHECK_THROWS_AS(parse_fit_spec("kappa_Q"), cascade::ValidationError);
}
