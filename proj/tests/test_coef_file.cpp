#include <gtest/gtest.h>

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <sstream>

#include <lpseries/coef_file.hpp>

using namespace lpseries;

namespace {

const SolutionSet<double>& full5() {
    static const SolutionSet<double> s = build<double>(kEarthMoonMu, Point::L2, 5);
    return s;
}

std::filesystem::path tmp(const std::string& name) {
    return std::filesystem::temp_directory_path() / ("lpseries_test_" + name);
}

SolutionSet<double> parse(const std::string& text) {
    std::istringstream in(text);
    return parse_coefficients(in, "<string>");
}

}  // namespace

TEST(CoefFile, RoundTripIsBitExact) {
    const auto path = tmp("rt.coef");
    write_coefficients(path.string(), full5());
    const auto back = read_coefficients(path.string());
    EXPECT_EQ(back.order, full5().order);
    EXPECT_EQ(back.params.point, Point::L2);
    EXPECT_EQ(back.params.mu, kEarthMoonMu);
    EXPECT_TRUE(back.x == full5().x);
    EXPECT_TRUE(back.y == full5().y);
    EXPECT_TRUE(back.z == full5().z);
    EXPECT_TRUE(back.omega == full5().omega);
    EXPECT_TRUE(back.nu == full5().nu);
    EXPECT_TRUE(back.lambda == full5().lambda);
    EXPECT_TRUE(back.delta == full5().delta);
    EXPECT_EQ(back.mask.active, full5().mask.active);
    EXPECT_EQ(format_coefficients(back), format_coefficients(full5()));
    std::filesystem::remove(path);
}

TEST(CoefFile, CenterMaskInferred) {
    BuildOptions o;
    o.mask = AmplitudeMask::center();
    const auto s = build<double>(kSunEarthMu, Point::L1, 4, o);
    const auto back = parse(format_coefficients(s));
    EXPECT_EQ(back.mask.active, s.mask.active);
    EXPECT_TRUE(back.z == s.z);
}

TEST(CoefFile, HeaderAndLineFormat) {
    const auto text = format_coefficients(full5());
    EXPECT_EQ(text.rfind("#crtbp-series v1", 0), 0u);
    EXPECT_NE(text.find("\nomega "), std::string::npos);
    EXPECT_NE(text.find("\ndelta 0 0 0 0 0 0 -"), std::string::npos);
}

TEST(CoefFile, MalformedInputFails) {
    EXPECT_THROW(parse(""), IoError);
    EXPECT_THROW(parse("#crtbp-series v2\n"), IoError);
    auto text = format_coefficients(full5());
    EXPECT_THROW(parse(text.substr(0, text.size() / 2) + "x 1 2 zz\n"), IoError);
    const auto pos = text.find("\nx ");
    ASSERT_NE(pos, std::string::npos);
    text.insert(pos + 1, "x 0 0 0 0 1 0 0 c 1.0\n");
    EXPECT_THROW(parse(text), IoError);
}

TEST(CoefFile, MissingFileAndBadDirectory) {
    EXPECT_THROW(read_coefficients(tmp("does_not_exist.coef").string()), IoError);
    EXPECT_THROW(write_coefficients("/nonexistent_dir/x.coef", full5()), IoError);
}
