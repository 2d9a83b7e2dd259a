#include <gtest/gtest.h>

#include <filesystem>
#include <fstream>
#include <sstream>

#include <polyquant/io.hpp>

using namespace polyquant;
using io::json;

namespace {

std::filesystem::path scratch(const std::string& name) {
    const auto d = std::filesystem::temp_directory_path() / "polyquant_test_io";
    std::filesystem::create_directories(d);
    return d / name;
}

std::string slurp(const std::filesystem::path& p) {
    std::ifstream in(p);
    std::stringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

}  // namespace

TEST(Config, Defaults) {
    const auto c = io::parse_config(json::object());
    EXPECT_EQ(c.potential, Potential(4, {}));
    EXPECT_EQ(c.spectrum.k_max, 48);
    EXPECT_EQ(c.spectrum.scheme, "alternating-immediate");
    EXPECT_FALSE(c.wavefunction.lambda.has_value());
    EXPECT_NO_THROW(io::check_config(c));
}

TEST(Config, ParsesComplexCoefficients) {
    const auto c = io::parse_config(json::parse(R"({"potential": {"N": 4, "v": [0, [1.5, -0.5], 0]}, "spectrum": {"k_max": 12}})"));
    EXPECT_EQ(c.potential.coefficient(2), cplx(1.5, -0.5));
    EXPECT_EQ(c.spectrum.k_max, 12);
}

TEST(Config, RejectsUnknownKeys) {
    EXPECT_THROW(io::parse_config(json::parse(R"({"potentail": {"N": 4}})")), io::config_error);
    EXPECT_THROW(io::parse_config(json::parse(R"({"spectrum": {"kmax": 4}})")), io::config_error);
    EXPECT_THROW(io::parse_config(json::parse(R"({"potential": {"N": 4, "w": []}})")), io::config_error);
}

TEST(Config, RejectsBadValues) {
    EXPECT_THROW(io::parse_config(json::parse(R"({"spectrum": {"k_max": "many"}})")), io::config_error);
    EXPECT_THROW(io::parse_config(json::parse(R"({"potential": {"N": 2}})")), io::config_error);
    EXPECT_THROW(io::parse_config(json::parse(R"({"potential": {"N": 4, "v": [1, 2, 3, 4]}})")), io::config_error);
    auto c = io::parse_config(json::parse(R"({"spectrum": {"scheme": "jacobi"}})"));
    EXPECT_THROW(io::check_config(c), io::config_error);
    c = io::parse_config(json::parse(R"({"spectrum": {"parity": "up"}})"));
    EXPECT_THROW(io::check_config(c), io::config_error);
    c = io::parse_config(json::parse(R"({"validate": {"checks": ["wronskian", "magic"]}})"));
    EXPECT_THROW(io::check_config(c), io::config_error);
    c = io::parse_config(json::parse(R"({"output": {"formats": ["xml"]}})"));
    EXPECT_THROW(io::check_config(c), io::config_error);
}

TEST(Config, EchoRoundTrips) {
    const auto c = io::parse_config(json::parse(R"({"potential": {"N": 4, "v": [0, -2, 0]},
        "wavefunction": {"lambda": [-1.06, 0], "a_grid": [0, 0.25]}, "validate": {"lambda_grid": [1, [0, 2]]}})"));
    const json echo = io::to_json(c);
    const auto again = io::parse_config(echo);
    EXPECT_EQ(io::to_json(again), echo);
    EXPECT_EQ(again.potential, c.potential);
    EXPECT_EQ(*again.wavefunction.lambda, cplx(-1.06, 0));
}

TEST(Config, LoadReportsMissingAndMalformedFiles) {
    EXPECT_THROW(io::load_config("/nonexistent/config.json"), io::config_error);
    const auto p = scratch("bad.json");
    std::ofstream(p) << "{ not json";
    EXPECT_THROW(io::load_config(p.string()), io::config_error);
}

TEST(Artifacts, NumbersRoundTrip) {
    for (double x : {1.0 / 3, 1.0603620904841828, -2.5e-300, 0.0}) EXPECT_EQ(std::stod(io::num(x)), x);
}

TEST(Artifacts, CsvHeaderCarriesMetadata) {
    std::ostringstream os;
    io::write_csv_header(os, {"spectrum", io::to_json(io::RunConfig{}), false});
    std::istringstream is(os.str());
    std::string line;
    int n = 0;
    while (std::getline(is, line)) {
        ASSERT_EQ(line[0], '#');
        ++n;
    }
    EXPECT_EQ(n, 3);
    EXPECT_NE(os.str().find(io::version), std::string::npos);
    EXPECT_NE(os.str().find("\"k_max\":48"), std::string::npos);
}

TEST(Artifacts, TimestampIsTheOnlyVaryingLine) {
    std::ostringstream a, b;
    io::write_csv_header(a, {"x", json::object(), true});
    io::write_csv_header(b, {"x", json::object(), false});
    EXPECT_NE(a.str().find("# timestamp: "), std::string::npos);
    EXPECT_EQ(b.str().find("timestamp"), std::string::npos);
}

TEST(ChainFiles, RoundTrip) {
    SchemeConfig cfg;
    cfg.k_max = 6;
    const Potential V(4, {0, 1.0, 0});
    const auto s = initialize_chains(V, Parity::dirichlet, cfg, bs_coefficients(V, Parity::dirichlet, 6));
    const auto p = scratch("chains.csv");
    io::write_chain_csv(p, {&s}, {"spectrum", json::object(), false});
    const auto rows = io::read_chain_csv(p.string());
    ASSERT_EQ(rows.size(), static_cast<std::size_t>(3 * 7));
    for (int l = 0; l < 3; ++l) EXPECT_EQ(io::chain_levels(rows, l, Parity::dirichlet), s.chain(l).levels());
    EXPECT_TRUE(io::chain_levels(rows, 0, Parity::neumann).empty());
    // writing twice gives the same bytes
    const auto q = scratch("chains2.csv");
    io::write_chain_csv(q, {&s}, {"spectrum", json::object(), false});
    EXPECT_EQ(slurp(p), slurp(q));
}

TEST(ChainFiles, HeaderCarriesRunConfig) {
    SchemeConfig cfg;
    cfg.k_max = 4;
    const Potential V(4, {0, 1.5, 0});
    const auto s = initialize_chains(V, Parity::neumann, cfg, bs_coefficients(V, Parity::neumann, 6));
    io::RunConfig run;
    run.potential = V;
    run.spectrum.fit_levels = 60;
    const auto p = scratch("with_config.csv");
    io::write_chain_csv(p, {&s}, {"spectrum", io::to_json(run), true});
    const auto back = io::read_chain_config(p.string());
    ASSERT_TRUE(back.has_value());
    EXPECT_EQ(back->potential, V);
    EXPECT_EQ(back->spectrum.fit_levels, 60);
    const auto bare = scratch("bare.csv");
    std::ofstream(bare) << "ell,parity,k,re_E,im_E\n0,even,0,1,0\n";
    EXPECT_FALSE(io::read_chain_config(bare.string()).has_value());
}

TEST(ChainFiles, RejectsMalformedInput) {
    const auto p = scratch("broken.csv");
    std::ofstream(p) << "# x\nell,parity,k,re_E,im_E\n0,odd,0,1.5\n";
    EXPECT_THROW(io::read_chain_csv(p.string()), io::config_error);
    std::ofstream(p) << "a,b\n";
    EXPECT_THROW(io::read_chain_csv(p.string()), io::config_error);
    const std::vector<io::ChainRow> gap{{0, Parity::neumann, 0, 1.0}, {0, Parity::neumann, 2, 3.0}};
    EXPECT_THROW(io::chain_levels(gap, 0, Parity::neumann), io::config_error);
}

TEST(Artifacts, JsonCarriesMeta) {
    const auto p = scratch("out/sub/report.json");
    std::filesystem::remove_all(p.parent_path());
    io::write_json(p, {{"value", 1}}, {"validate", json::object(), false});
    const auto j = json::parse(slurp(p));
    EXPECT_EQ(j["value"], 1);
    EXPECT_EQ(j["meta"]["command"], "validate");
    EXPECT_EQ(j["meta"]["version"], io::version);
    EXPECT_FALSE(j["meta"].contains("timestamp"));
}
