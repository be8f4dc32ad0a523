#include <gtest/gtest.h>

#include <cmath>
#include <sstream>
#include <string>

#include "latgp/dataset.hpp"
#include "latgp/features.hpp"

namespace {

using namespace latgp;

const std::string kHeader =
    "h,w,h_o,w_o,k,f,c,pf,pc,m_clk_mhz,l_clk_mhz,m_eff_pct,s_bits,dw_bits,position,latency_ms\n";

std::string error_of(const std::string& text) {
    std::istringstream in(text);
    try {
        read_csv(in);
    } catch (const DataError& e) {
        return e.what();
    }
    return "";
}

TEST(ReadCsv, ParsesRowsInAnyColumnOrder) {
    std::istringstream in(
        "latency_ms,position,h,w,h_o,w_o,k,f,c,pf,pc,m_clk_mhz,l_clk_mhz,m_eff_pct,s_bits,dw_bits\n"
        "0.25,middle,56,56,56,56,3,64,64,64,64,200,200,70,64,8\n");
    const auto s = read_csv(in);
    ASSERT_EQ(s.size(), 1u);
    EXPECT_EQ(s[0].layer, (LayerConfig{56, 56, 56, 56, 3, 64, 64}));
    EXPECT_EQ(s[0].hw, HardwareConfig::reference());
    EXPECT_EQ(s[0].position, LayerPosition::Middle);
    EXPECT_EQ(s[0].latency_ms, 0.25);
}

TEST(ReadCsv, MissingColumn) {
    EXPECT_EQ(error_of("h,w,h_o,w_o,k,f,c,pf,pc,m_clk_mhz,l_clk_mhz,m_eff_pct,s_bits,position,latency_ms\n"
                       "1,1,1,1,1,64,3,64,64,200,200,70,64,first,0.1\n"),
              "missing column 'dw_bits'");
}

TEST(ReadCsv, NonNumericCell) {
    const std::string e = error_of(kHeader + "56,abc,56,56,3,64,64,64,64,200,200,70,64,8,first,0.1\n");
    EXPECT_NE(e.find("row 2"), std::string::npos) << e;
    EXPECT_NE(e.find("'w'"), std::string::npos) << e;
}

TEST(ReadCsv, NonPositiveLatencyNamesRow) {
    const std::string e = error_of(kHeader + "56,56,56,56,3,64,64,64,64,200,200,70,64,8,first,0.1\n" +
                                   "56,56,56,56,3,64,64,64,64,200,200,70,64,8,last,0\n");
    EXPECT_NE(e.find("row 3"), std::string::npos) << e;
    EXPECT_NE(e.find("latency"), std::string::npos) << e;
}

TEST(ReadCsv, BadPositionAndCellCount) {
    EXPECT_NE(error_of(kHeader + "56,56,56,56,3,64,64,64,64,200,200,70,64,8,single,0.1\n").find("position"),
              std::string::npos);
    EXPECT_NE(error_of(kHeader + "56,56,56,56,3,64,64,64,64,200,200,70,64,first,0.1\n").find("expected 16 cells"),
              std::string::npos);
}

TEST(ReadCsv, EmptyInputs) {
    EXPECT_EQ(error_of(""), "no samples");
    EXPECT_EQ(error_of(kHeader), "no samples");
    EXPECT_EQ(error_of(kHeader + "\n  \n"), "no samples");
}

TEST(ReadCsv, MixedHardwareWarns) {
    std::istringstream in(kHeader + "56,56,56,56,3,64,64,64,64,200,200,70,64,8,first,0.1\n" +
                          "56,56,56,56,3,64,64,32,64,200,200,70,64,8,last,0.1\n");
    std::vector<std::string> warnings;
    EXPECT_EQ(read_csv(in, &warnings).size(), 2u);
    ASSERT_EQ(warnings.size(), 1u);
    EXPECT_NE(warnings[0].find("row 3"), std::string::npos);
}

TEST(WriteCsv, RoundTripIsExact) {
    HardwareConfig hw = HardwareConfig::reference();
    hw.m_eff = 0.73;
    hw.m_clk_mhz = 187.5;
    const auto samples = generate_synthetic(5, 90, hw);
    std::stringstream buf;
    write_csv(buf, samples);
    const auto back = read_csv(buf);
    ASSERT_EQ(back.size(), samples.size());
    for (std::size_t i = 0; i < samples.size(); ++i) {
        EXPECT_EQ(back[i].layer, samples[i].layer);
        EXPECT_EQ(back[i].hw, samples[i].hw);
        EXPECT_EQ(back[i].position, samples[i].position);
        EXPECT_EQ(back[i].latency_ms, samples[i].latency_ms);
    }
}

TEST(WriteCsv, RejectsSinglePosition) {
    Sample s{{1, 1, 1, 1, 1, 64, 3}, HardwareConfig::reference(), LayerPosition::Single, 1.0};
    std::ostringstream out;
    EXPECT_THROW(write_csv(out, std::span<const Sample>(&s, 1)), DataError);
}

TEST(Features, ReferenceOrder) {
    const Eigen::VectorXd x = featurize({56, 56, 56, 56, 3, 64, 64}, HardwareConfig::reference());
    ASSERT_EQ(x.size(), 14);
    const double expected[] = {56, 56, 56, 56, 3, 64, 64, 64, 64, 200, 200, 0.7, 64, 8};
    for (int i = 0; i < 14; ++i) EXPECT_EQ(x(i), expected[i]) << i;
}

TEST(Features, KernelSizeOnlyChangesItsColumn) {
    const Eigen::VectorXd a = featurize({56, 56, 56, 56, 3, 64, 64}, HardwareConfig::reference());
    const Eigen::VectorXd b = featurize({56, 56, 56, 56, 5, 64, 64}, HardwareConfig::reference());
    const Eigen::VectorXd d = b - a;
    for (int i = 0; i < 14; ++i) EXPECT_EQ(d(i), i == feature::kK ? 2.0 : 0.0);
}

TEST(Features, Reconstruction) {
    for (const Sample& s : generate_synthetic(6, 40, HardwareConfig::reference())) {
        const Eigen::VectorXd x = featurize(s);
        EXPECT_EQ(layer_from_features(x), s.layer);
        EXPECT_EQ(hardware_from_features(x), s.hw);
    }
}

TEST(Features, StandardizationMoments) {
    const Dataset d = make_dataset(generate_synthetic(7, 120, HardwareConfig::reference()));
    const FeatureStats st = FeatureStats::compute(d.features);
    const Eigen::MatrixXd z = st.apply(d.features);
    for (Eigen::Index j = 0; j < z.cols(); ++j) {
        const double mean = z.col(j).mean();
        const double sd = std::sqrt((z.col(j).array() - mean).square().mean());
        EXPECT_NEAR(mean, 0.0, 1e-12);
        if (j >= feature::kPf) {
            EXPECT_EQ(st.stddev(j), 1.0);  // constant hardware column
            EXPECT_EQ(sd, 0.0);
        } else {
            EXPECT_NEAR(sd, 1.0, 1e-12);
        }
    }
}

TEST(Synthetic, UndistortedTargetsAreClosedForm) {
    for (const Sample& s : generate_synthetic(8, 200, HardwareConfig::reference(), DistortionSpec::none())) {
        EXPECT_EQ(s.latency_ms, layer_breakdown(s.layer, s.hw, s.position).t_layer);
    }
}

TEST(Synthetic, SeedDeterminesOutput) {
    const auto a = generate_synthetic(42, 156, HardwareConfig::reference());
    const auto b = generate_synthetic(42, 156, HardwareConfig::reference());
    const auto c = generate_synthetic(43, 156, HardwareConfig::reference());
    std::ostringstream sa, sb, sc;
    write_csv(sa, a);
    write_csv(sb, b);
    write_csv(sc, c);
    EXPECT_EQ(sa.str(), sb.str());
    EXPECT_NE(sa.str(), sc.str());
}

TEST(Synthetic, ShapesAndLatenciesInRange) {
    using namespace synth_range;
    const auto samples = generate_synthetic(9, 400, HardwareConfig::reference());
    ASSERT_EQ(samples.size(), 400u);
    for (const Sample& s : samples) {
        const auto& l = s.layer;
        EXPECT_GE(l.h, kSpatialMin);
        EXPECT_LE(l.h, kSpatialMax);
        EXPECT_GE(l.w, kSpatialMin);
        EXPECT_LE(l.w, kSpatialMax);
        EXPECT_LE(l.h_o, std::min(l.h, kOutputMax));
        EXPECT_LE(l.w_o, std::min(l.w, kOutputMax));
        EXPECT_GE(l.c, kChannelMin);
        EXPECT_LE(l.c, kChannelMax);
        EXPECT_GE(l.f, kFilterMin);
        EXPECT_LE(l.f, kFilterMax);
        EXPECT_TRUE(l.k == 1 || l.k == 3 || l.k == 5 || l.k == 7);
        EXPECT_GE(s.latency_ms, kLatencyMinMs);
        EXPECT_LE(s.latency_ms, kLatencyMaxMs);
        EXPECT_NE(s.position, LayerPosition::Single);
    }
}

TEST(Synthetic, PositionsFollowNetworkLengths) {
    const auto s = generate_synthetic(10, 24 + 75 + 2, HardwareConfig::reference());
    EXPECT_EQ(s[0].position, LayerPosition::First);
    EXPECT_EQ(s[1].position, LayerPosition::Middle);
    EXPECT_EQ(s[23].position, LayerPosition::Last);
    EXPECT_EQ(s[24].position, LayerPosition::First);
    EXPECT_EQ(s[98].position, LayerPosition::Last);
    // the remaining two samples form a short third network
    EXPECT_EQ(s[99].position, LayerPosition::First);
    EXPECT_EQ(s[100].position, LayerPosition::Last);
    EXPECT_EQ(generate_synthetic(10, 1, HardwareConfig::reference())[0].position, LayerPosition::First);
}

TEST(Synthetic, InvalidRequests) {
    EXPECT_THROW(generate_synthetic(1, 0, HardwareConfig::reference()), DataError);
    HardwareConfig slow = HardwareConfig::reference();
    slow.l_clk_mhz = 1e-6;  // every latency far above the profiled range
    slow.m_clk_mhz = 1e-6;
    EXPECT_THROW(generate_synthetic(1, 1, slow), DataError);
}

}  // namespace
