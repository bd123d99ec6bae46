#include <doctest.h>

#include <string>

#include "stormcells/config.hpp"

using namespace stormcells;

namespace {

const char* kMinimal = R"(model = brown_resnick
alpha = 1
s = 1
dim = 2
half_width = 16
replicates = 100
seed = 42
tasks = margins
)";

std::string error_of(const std::string& text)
{
    try {
        parse_config(text);
    } catch (const std::exception& e) {
        return e.what();
    }
    return {};
}

}  // namespace

TEST_CASE("minimal document")
{
    const ExperimentConfig c = parse_config(kMinimal);
    CHECK(c.model.kind == "brown_resnick");
    CHECK(c.half_width == 16);
    CHECK(c.seed == 42);
    REQUIRE(c.tasks.size() == 1);
    CHECK(c.tasks[0].replicates == 100);
    CHECK(c.tasks[0].z == std::vector<double>{0.5, 1, 2, 5});
    const std::string echo = echo_config(c);
    CHECK(echo.find("[margins]") != std::string::npos);
    // The echo is a fixed point.
    CHECK(echo_config(parse_config(echo)) == echo);
}

TEST_CASE("round trip with every task")
{
    const std::string text = R"(# everything
model = composite
sigma = 1.5
ell = 2
weight = 0.25
half_width = 6
spacing = 0.5
replicates = 10
tasks = margins, theta_grid, pi_grid, coverage, containment, volume, boundedness, density, beta_bound

[pi_grid]
lags = 0,0; 2,1
formula = false
[coverage]
x = 1,0
sets = 1,0 | 1,0; 0,1
[containment]
radii = 2, 4
[boundedness]
half_widths = 4, 6, 8
inner_fraction = 0.25
[beta_bound]
distances = 1.5, 3
replicates = 7
)";
    const ExperimentConfig c = parse_config(text);
    CHECK(c.tasks.size() == 9);
    CHECK(c.tasks[2].lags.size() == 2);
    CHECK_FALSE(c.tasks[2].formula);
    CHECK(c.tasks[3].sets.size() == 2);
    CHECK(c.tasks[6].half_widths == std::vector<int>{4, 6, 8});
    CHECK(c.tasks[8].replicates == 7);
    const std::string echo = echo_config(c);
    CHECK(echo_config(parse_config(echo)) == echo);
    CHECK(build_model(c).kind() == ModelKind::Composite);
}

TEST_CASE("validation errors name the key")
{
    try {
        parse_config(std::string(kMinimal) + "replicates = 0\n");
        FAIL("expected an error");
    } catch (const ConfigParseError& e) {
        // Duplicate key is a parse error; check the plain case below.
        CHECK(e.line() == 9);
    }
    std::string text = kMinimal;
    text.replace(text.find("replicates = 100"), 16, "replicates = 0");
    try {
        parse_config(text);
        FAIL("expected an error");
    } catch (const ConfigValidationError& e) {
        CHECK(e.key() == "replicates");
    }
}

TEST_CASE("unknown keys get suggestions")
{
    std::string text = kMinimal;
    text.replace(text.find("replicates"), 10, "replicas");
    try {
        parse_config(text);
        FAIL("expected an error");
    } catch (const ConfigValidationError& e) {
        CHECK(e.key() == "replicas");
        CHECK(std::string(e.what()).find("did you mean 'replicates'") != std::string::npos);
    }
    CHECK(suggest_key("half_widht", {"half_width", "seed"}) == "half_width");
    CHECK_FALSE(suggest_key("zzzzzz", {"half_width", "seed"}).has_value());
    CHECK(error_of(std::string(kMinimal) + "[margins]\nzz = 1\n").find("unknown key 'zz'") != std::string::npos);
}

TEST_CASE("parse errors carry positions")
{
    try {
        parse_config("model = smith\n  oops\n");
        FAIL("expected an error");
    } catch (const ConfigParseError& e) {
        CHECK(e.line() == 2);
        CHECK(e.column() == 3);
    }
    try {
        parse_config("model = smith\n[margins\n");
        FAIL("expected an error");
    } catch (const ConfigParseError& e) {
        CHECK(e.line() == 2);
    }
}

TEST_CASE("semantic checks")
{
    const std::string base = "model = smith\nhalf_width = 4\ntasks = ";
    CHECK(error_of(base + "margins\nalpha = 1\n").find("does not apply") != std::string::npos);
    CHECK(error_of(base + "theta_grid\n[theta_grid]\nlags = 5,0\n").find("outside") != std::string::npos);
    CHECK(error_of(base + "margins\n[density]\n").find("not name a task") != std::string::npos);
    CHECK(error_of(base + "margin\n").find("did you mean 'margins'") != std::string::npos);
    CHECK(error_of(base + "margins\ndim = 4\n").find("dim") != std::string::npos);
    CHECK(error_of(base + "margins\nsigma = -1\n").find("positive") != std::string::npos);
    CHECK(error_of(base + "margins\nbackend = extremal_fns\n").find("incompatible") != std::string::npos);
    CHECK(error_of("model = schlather\ntasks = oracle_check\n").find("oracle_check") != std::string::npos);
    CHECK(error_of("model = brown_resnick\nalpha = 2.5\ntasks = margins\n").find("alpha") != std::string::npos);
    CHECK(error_of(base + "beta_bound\n[beta_bound]\ndistances = 9\n").find("no sites") != std::string::npos);
    CHECK(error_of("tasks = margins\n").find("model") != std::string::npos);
    CHECK(error_of(base + "margins\n[margins]\nreplicates = -3\n").find("replicates") != std::string::npos);
}
