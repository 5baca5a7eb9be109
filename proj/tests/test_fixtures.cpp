#include <gtest/gtest.h>

#include "lqgan/fixtures.hpp"

using namespace lqgan;

TEST(Fixtures, VerifiedValuesReproduce) {
    for (const FixtureOutcome& r : run_fixtures(fixture_suite()))
        if (r.verified) EXPECT_TRUE(r.passed) << r.name << " (" << r.inputs << "): " << r.observed;
}

TEST(Fixtures, AssertThrowsOnMiss) {
    std::vector<Fixture> bad{{"off-by-one", "none", 1.0, [] { return 2.0; }}};
    EXPECT_THROW(assert_fixtures(run_fixtures(bad)), FixtureFailure);
    bad[0].verified = false;
    EXPECT_NO_THROW(assert_fixtures(run_fixtures(bad)));
}

TEST(Fixtures, ZeroUsesAbsoluteTolerance) {
    EXPECT_TRUE(fixture_matches(0.0, 5e-10, 1e-6, 1e-9));
    EXPECT_FALSE(fixture_matches(0.0, 5e-9, 1e-6, 1e-9));
    EXPECT_FALSE(fixture_matches(1.0, std::nan(""), 1e-6, 1e-9));
}
