#include <filesystem>
#include <fstream>

#include "doctest.h"
#include "nc/config.hpp"
#include "nc/errors.hpp"

using namespace nc;

TEST_CASE("config JSON round trips losslessly") {
    RunConfig config = demo_config();
    config.seed = 0xdeadbeefcafef00dULL;  // exercise a large u64
    config.tolerance = 1.0 / 3.0;
    const std::string text = config_to_json(config);
    const RunConfig parsed = config_from_json(text, "test");
    CHECK(parsed == config);
}

TEST_CASE("config file round trip") {
    const auto path = std::filesystem::temp_directory_path() / "nc_config_test.json";
    save_config(demo_config(), path);
    CHECK(load_config(path) == demo_config());
    std::filesystem::remove(path);
}

TEST_CASE("config validation names the offending field") {
    RunConfig config = demo_config();
    config.n_points = 0;
    CHECK_THROWS_WITH_AS(validate_config(config), doctest::Contains("n_points"),
                         ValidationError);

    config = demo_config();
    config.corpus.scale_min = -1.0;
    CHECK_THROWS_WITH_AS(validate_config(config), doctest::Contains("scale"),
                         ValidationError);

    config = demo_config();
    config.batches = 0;
    CHECK_THROWS_WITH_AS(validate_config(config), doctest::Contains("batches"),
                         ValidationError);
}

TEST_CASE("config parsing rejects missing or mistyped fields") {
    CHECK_THROWS_AS(config_from_json("{ nope", "test"), IoError);
    CHECK_THROWS_WITH_AS(config_from_json("{}", "test"), doctest::Contains("version"),
                         ValidationError);

    const std::string text = config_to_json(demo_config());
    std::string broken = text;
    const auto pos = broken.find("\"budget\": 40");
    REQUIRE(pos != std::string::npos);
    broken.replace(pos, 12, "\"budget\": \"x\"");
    CHECK_THROWS_WITH_AS(config_from_json(broken, "test"), doctest::Contains("budget"),
                         ValidationError);
}

TEST_CASE("unknown shape family is rejected") {
    std::string text = config_to_json(demo_config());
    const auto pos = text.find("\"sphere\"");
    REQUIRE(pos != std::string::npos);
    text.replace(pos, 8, "\"torus\"");
    CHECK_THROWS_AS(config_from_json(text, "test"), ValidationError);
}

TEST_CASE("the demo config is valid and matches the shipped file") {
    CHECK_NOTHROW(validate_config(demo_config()));

    const std::filesystem::path shipped =
        std::filesystem::path(NC_SOURCE_DIR) / "configs" / "demo.json";
    REQUIRE(std::filesystem::exists(shipped));
    CHECK(load_config(shipped) == demo_config());
}
