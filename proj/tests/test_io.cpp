#include <gtest/gtest.h>

#include <cmath>
#include <limits>

#include "test_util.hpp"
#include "vsp/io.hpp"

using namespace vsp;
using vsp::test::cesium;

namespace {

const char* header = "# reference_transition: D2 F=4->F'=5\ndetuning_MHz,OD\n";

int ingestion_row(const std::filesystem::path& p) {
  try {
    (void)io::read_spectrum_csv(p, cesium());
  } catch (const IngestionError& e) {
    return e.row();
  }
  return -1;
}

}  // namespace

TEST(Format, ShortestRoundTrip) {
  for (double x : {0.1, 1.0 / 3.0, 6.02214076e23, -2.5e-300, 0.0}) EXPECT_EQ(std::stod(io::format(x)), x);
  EXPECT_EQ(io::format(0.1), "0.1");
  EXPECT_EQ(io::format(std::numeric_limits<double>::infinity()), "inf");
  EXPECT_EQ(io::format(std::nan("")), "nan");
}

TEST(Hash, Fnv1aKnownValues) {
  EXPECT_EQ(io::fnv1a(""), 0xcbf29ce484222325ULL);
  EXPECT_EQ(io::hex(io::fnv1a("a")), "af63dc4c8601ec8c");
}

TEST(SpectrumCsv, RoundTrip) {
  const auto dir = test::scratch("io_roundtrip");
  const Transition& ref = cesium().transition(cesium().probe_reference);
  Spectrum s;
  s.reference_omega = ref.omega0;
  s.reference_label = ref.label;
  s.temperature = 296.15;
  s.sequence_hash = "fnv1a64:0123";
  for (int i = 0; i < 20; ++i) {
    s.omega.push_back(ref.omega0 + constants::mhz_to_rad_s(-100.0 + 10.0 * i));
    s.od.push_back(0.01 * i * i);
    s.od_uncertainty.push_back(0.01 + 0.001 * i);
  }
  io::write_spectrum_csv(dir / "s.csv", s);
  const auto r = io::read_spectrum_csv(dir / "s.csv", cesium());
  ASSERT_EQ(r.size(), s.size());
  EXPECT_EQ(r.od, s.od);
  EXPECT_EQ(r.od_uncertainty, s.od_uncertainty);
  EXPECT_EQ(r.reference_label, ref.label);
  EXPECT_EQ(r.temperature, 296.15);
  EXPECT_EQ(r.sequence_hash, s.sequence_hash);
  const auto a = s.detuning_mhz(), b = r.detuning_mhz();
  for (std::size_t i = 0; i < a.size(); ++i) EXPECT_NEAR(a[i], b[i], 1e-6);
  // Writing twice gives identical bytes.
  io::write_spectrum_csv(dir / "t.csv", r);
  EXPECT_EQ(test::read_file(dir / "s.csv"), test::read_file(dir / "t.csv"));
}

TEST(SpectrumCsv, ErrorsNameTheRow) {
  const auto dir = test::scratch("io_errors");
  test::write_file(dir / "nonnumeric.csv", std::string(header) + "0,1\n1,abc\n");
  EXPECT_EQ(ingestion_row(dir / "nonnumeric.csv"), 4);
  test::write_file(dir / "decreasing.csv", std::string(header) + "0,1\n\n2,1\n1,1\n");
  EXPECT_EQ(ingestion_row(dir / "decreasing.csv"), 6);
  test::write_file(dir / "columns.csv", std::string(header) + "0,1,2\n");
  EXPECT_EQ(ingestion_row(dir / "columns.csv"), 3);
  test::write_file(dir / "header.csv", "detuning,OD\n0,1\n");
  EXPECT_EQ(ingestion_row(dir / "header.csv"), 1);
  test::write_file(dir / "unc.csv", "detuning_MHz,OD,OD_uncertainty\n0,1,0.1\n1,1,0\n");
  EXPECT_EQ(ingestion_row(dir / "unc.csv"), 3);
  test::write_file(dir / "inf.csv", "detuning_MHz,OD\n0,inf\n");
  EXPECT_EQ(ingestion_row(dir / "inf.csv"), 2);
  test::write_file(dir / "late_meta.csv", "detuning_MHz,OD\n0,1\n# probe_sign: 1\n");
  EXPECT_EQ(ingestion_row(dir / "late_meta.csv"), 3);
  test::write_file(dir / "empty.csv", "detuning_MHz,OD\n");
  EXPECT_THROW((void)io::read_spectrum_csv(dir / "empty.csv", cesium()), IngestionError);
  EXPECT_THROW((void)io::read_spectrum_csv(dir / "missing.csv", cesium()), IngestionError);
  test::write_file(dir / "ref.csv", "# reference_transition: nope\ndetuning_MHz,OD\n0,1\n");
  EXPECT_THROW((void)io::read_spectrum_csv(dir / "ref.csv", cesium()), IngestionError);
  test::write_file(dir / "sign.csv", "# probe_sign: 2\ndetuning_MHz,OD\n0,1\n");
  EXPECT_THROW((void)io::read_spectrum_csv(dir / "sign.csv", cesium()), IngestionError);
}

TEST(SpectrumCsv, DefaultsToSpeciesReference) {
  const auto dir = test::scratch("io_default_ref");
  test::write_file(dir / "s.csv", "detuning_MHz,OD\r\n-1.5,0.25\r\n2,0.5\r\n");
  const auto s = io::read_spectrum_csv(dir / "s.csv", cesium());
  EXPECT_EQ(s.reference_label, cesium().probe_reference);
  EXPECT_EQ(s.probe_sign, -1);
  EXPECT_NEAR(s.detuning_mhz()[0], -1.5, 1e-6);
  EXPECT_TRUE(s.od_uncertainty.empty());
}

TEST(RelaxationCsv, RoundTripAndOrdering) {
  const auto dir = test::scratch("io_relax");
  RelaxationSeries s;
  s.time = {0.0, 1e-3, 2e-3};
  s.transmission = {0.2, 0.5, 0.7};
  const std::vector<double> model{0.21, 0.49, 0.7};
  io::write_relaxation_csv(dir / "r.csv", s, &model);
  EXPECT_THROW((void)io::read_relaxation_csv(dir / "r.csv"), IngestionError);  // extra column
  io::write_relaxation_csv(dir / "r.csv", s);
  const auto r = io::read_relaxation_csv(dir / "r.csv");
  EXPECT_EQ(r.time, s.time);
  EXPECT_EQ(r.transmission, s.transmission);
  test::write_file(dir / "bad.csv", "time_s,transmission\n0,1\n0,1\n");
  try {
    (void)io::read_relaxation_csv(dir / "bad.csv");
    FAIL();
  } catch (const IngestionError& e) {
    EXPECT_EQ(e.row(), 3);
  }
}

TEST(Yaml, NumbersAreShortened) {
  const auto dir = test::scratch("io_yaml");
  YAML::Node doc;
  doc["a"] = 0.1;
  doc["list"].push_back(1.0 / 3.0);
  doc["name"] = "x";
  doc["unbounded"] = io::time_ns(std::numeric_limits<double>::infinity());
  io::write_yaml(dir / "d.yaml", doc);
  const auto text = test::read_file(dir / "d.yaml");
  EXPECT_NE(text.find("a: 0.1\n"), std::string::npos) << text;
  EXPECT_NE(text.find("0.3333333333333333"), std::string::npos);
  EXPECT_NE(text.find("unbounded: unbounded"), std::string::npos);
  const auto back = YAML::LoadFile((dir / "d.yaml").string());
  EXPECT_EQ(back["list"][0].as<double>(), 1.0 / 3.0);
}
