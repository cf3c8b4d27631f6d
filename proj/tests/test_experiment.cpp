#include <doctest.h>

#include <filesystem>
#include <fstream>
#include <sstream>

#include "zrec/experiment.hpp"

using namespace zrec;

namespace {

ErrorCode code_of(auto&& f) {
    try {
        f();
    } catch (const Error& e) {
        return e.code();
    }
    return ErrorCode::Ok;
}

std::string slurp(const std::filesystem::path& p) {
    std::ifstream is(p, std::ios::binary);
    std::ostringstream ss;
    ss << is.rdbuf();
    return ss.str();
}

std::filesystem::path scratch(const std::string& name) {
    auto p = std::filesystem::temp_directory_path() / ("zrec-test-" + name);
    std::filesystem::remove_all(p);
    return p;
}

Json trinomial_with(const std::string& kind, Json params) {
    Json cfg = preset("trinomial3");
    cfg["kind"] = kind;
    cfg["params"] = std::move(params);
    cfg.erase("thresholds");
    return cfg;
}

}  // namespace

TEST_CASE("config validation") {
    const Json good = preset("trinomial3");
    CHECK(parse_config(good).kind == "llt");

    auto broken = [&](auto mutate) {
        Json c = good;
        mutate(c);
        return code_of([&] { parse_config(c); });
    };
    CHECK(broken([](Json& c) { c["extra"] = 1; }) == ErrorCode::ConfigInvalid);
    CHECK(broken([](Json& c) { c["kind"] = "nope"; }) == ErrorCode::ConfigInvalid);
    CHECK(broken([](Json& c) { c.erase("seed"); }) == ErrorCode::ConfigInvalid);
    CHECK(broken([](Json& c) { c["seed"] = -3; }) == ErrorCode::ConfigInvalid);
    CHECK(broken([](Json& c) { c["seed"] = "1"; }) == ErrorCode::ConfigInvalid);
    CHECK(broken([](Json& c) { c["model"]["shift"]["colour"] = 1; }) == ErrorCode::ConfigInvalid);
    CHECK(broken([](Json& c) { c["model"]["potential"]["values"] = Json{{"a", 1}}; }) == ErrorCode::ConfigInvalid);
    CHECK(broken([](Json& c) { c["params"]["q_max"] = 3; }) == ErrorCode::ConfigInvalid);
    CHECK(broken([](Json& c) { c["params"]["n_list"] = 4; }) == ErrorCode::ConfigInvalid);
    CHECK(broken([](Json& c) { c["thresholds"]["sigma2"]["maxx"] = 1; }) == ErrorCode::ConfigInvalid);
    CHECK(broken([](Json& c) { c["thresholds"]["sigma2"] = Json{{"expected", 1}}; }) == ErrorCode::ConfigInvalid);
    CHECK(broken([](Json& c) { c.erase("system"); }) == ErrorCode::ConfigInvalid);
    CHECK(broken([](Json& c) { c["system"]["cocycle"]["values"]["a"] = -0.5; }) == ErrorCode::ConfigInvalid);
    CHECK(broken([](Json& c) { c["system"]["cocycle"]["values"]["a"] = 0; }) == ErrorCode::NotCentered);
    CHECK(broken([](Json& c) { c["model"]["shift"]["transitions"] = Json{{0, 1, 0}, {0, 0, 1}, {1, 0, 0}}; }) ==
          ErrorCode::NotPrimitive);
    CHECK(broken([](Json& c) { c["system"]["roof"] = Json{{"constant", -1.0}}; }) == ErrorCode::InvalidArgument);

    // Symmetrized cocycles on the golden mean shift.
    Json g = preset("golden-coboundary");
    g["system"]["cocycle"] = Json{{"depth", 2}, {"values", {{"aa", 0}, {"ab", 1}, {"ba", 0}}}, {"symmetrize", true}};
    const ExperimentConfig cfg = parse_config(g);
    CHECK(cfg.system->cocycle.to_words().at("ba") == -1);
}

TEST_CASE("presets") {
    for (const auto& name : kPresetNames) CHECK_NOTHROW(parse_config(preset(name)));
    CHECK(code_of([] { preset("unknown"); }) == ErrorCode::UnknownPreset);
    CHECK(Json::parse(config_schema()).at("properties").contains("kind"));
}

TEST_CASE("documented failure codes") {
    RunOptions quiet;
    quiet.write_files = false;
    CHECK(code_of([&] { run(preset("golden-coboundary"), quiet); }) == ErrorCode::Degenerate);
    Json b = preset("bernoulli2");
    b["kind"] = "llt";
    b.erase("params");
    b.erase("thresholds");
    CHECK(code_of([&] { run(b, quiet); }) == ErrorCode::Periodic);
}

TEST_CASE("gibbs run and thresholds") {
    RunOptions quiet;
    quiet.write_files = false;
    const RunReport r = run(preset("bernoulli2"), quiet);
    CHECK(r.pass);
    CHECK(r.report.at("results").at("entropy").get<double>() == doctest::Approx(std::log(2.0)).epsilon(1e-12));
    CHECK(r.report.at("rng") == "philox4x32-10");
    CHECK(r.report.at("config") == preset("bernoulli2"));
    CHECK(r.files.empty());

    Json strict = preset("bernoulli2");
    strict["thresholds"]["entropy"] = Json{{"min", 1.0}};
    strict["thresholds"]["no_such_metric"] = Json{{"max", 1.0}};
    const RunReport f = run(strict, quiet);
    CHECK_FALSE(f.pass);
    int failed = 0;
    for (const auto& c : f.checks) failed += !c.pass;
    CHECK(failed == 2);
}

TEST_CASE("same config and seed give identical CSV bytes") {
    const Json cfg = trinomial_with("return-dist", Json{{"cylinders", Json::array({Json{{"q", 0}, {"q_prime", 1}, {"word", "ab"}},
                                                                                Json{{"q", 1}, {"q_prime", 0}, {"word", nullptr}}})},
                                                         {"trials", 300},
                                                         {"cap", 200000}});
    const auto d1 = scratch("det1"), d2 = scratch("det2");
    RunOptions o1, o2;
    o1.output = d1.string();
    o1.threads = 1;
    o2.output = d2.string();
    o2.threads = 3;
    const RunReport a = run(cfg, o1);
    const RunReport b = run(cfg, o2);
    REQUIRE(a.files.size() == 3);
    for (const char* name : {"return_dist_q0_1.csv", "return_dist_q1_0.csv"}) {
        const std::string x = slurp(d1 / name);
        CHECK(x == slurp(d2 / name));
        CHECK(x.rfind("trial,w,roof_time,capped\r\n", 0) == 0);
    }
    CHECK(a.report.at("results") == b.report.at("results"));
    CHECK(Json::parse(slurp(d1 / "report.json")).at("seed") == cfg.at("seed"));

    RunOptions o3 = o1;
    o3.seed = 99;
    o3.output = scratch("det3").string();
    const RunReport c = run(cfg, o3);
    CHECK(c.report.at("seed") == 99);
    CHECK(c.report.at("results") != a.report.at("results"));
}

TEST_CASE("quadrature and dvoretzky kinds") {
    RunOptions quiet;
    quiet.write_files = false;
    const RunReport q = run(Json{{"kind", "quadrature-check"}, {"seed", 0}}, quiet);
    CHECK(q.pass);
    CHECK(q.report.at("results").at("semicircle_max_error").get<double>() <= 1e-6);

    Json d = trinomial_with("dvoretzky", Json{{"n_max", 4}, {"max_length", 2}});
    const RunReport r = run(d, quiet);
    CHECK(r.pass);
    CHECK(r.report.at("results").at("pairs").get<int>() == 5 * 21 * 21);
}

TEST_CASE("csv formatting") {
    CHECK(csv_number(0.1) == "0.10000000000000001");
    CHECK(csv_number(3.0) == "3");
    CHECK(std::stod(csv_number(1.0 / 3.0)) == 1.0 / 3.0);
    CHECK(csv_field("plain") == "plain");
    CHECK(csv_field("a,b") == "\"a,b\"");
    CHECK(csv_field("say \"hi\"") == "\"say \"\"hi\"\"\"");
}
