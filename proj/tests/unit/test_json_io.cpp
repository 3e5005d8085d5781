#include <gtest/gtest.h>

#include <cmath>
#include <fstream>

#include "eqp/errors.hpp"
#include "eqp/json_io.hpp"

using namespace eqp;

namespace {

std::string pointer_of(const std::string& text) {
  try {
    parse_config(text);
  } catch (const ConfigError& e) {
    return e.pointer();
  }
  return "<accepted>";
}

}  // namespace

TEST(Config, DefaultsRoundTrip) {
  const ExperimentConfig c;
  const std::string text = config_to_json(c).dump();
  EXPECT_EQ(parse_config(text), c);
  EXPECT_EQ(config_to_json(parse_config(text)).dump(), text);
}

TEST(Config, FullRoundTripIsBitIdentical) {
  const std::string text = R"j({
    "experiment": "clt",
    "driver": {"kind": "markov", "maps": ["kraus_scaled(2, depolarizing(0.5))", "depolarizing(0.1)"],
               "transition": [[0.7, 0.3], [0.1, 0.9]]},
    "n": 1234, "n_replicas": 17, "seeds": [1, 18446744073709551615],
    "probes": {"x": "basis1", "y": "random", "pairs": 2},
    "tolerances": {"ks_alpha": 0.05, "sigma2_ref": 0.1, "kappa_ref": 0.30000000000000004},
    "params": {"n_grid": [3, 9], "r": 0.25, "p": 4, "alpha": 0.5, "override_gate": true},
    "output": "somewhere"
  })j";
  const ExperimentConfig c = parse_config(text);
  EXPECT_EQ(c.seeds.back(), 18446744073709551615ULL);
  EXPECT_EQ(*c.tolerances.kappa_ref, 0.30000000000000004);
  const std::string once = config_to_json(c).dump();
  EXPECT_EQ(parse_config(once), c);
  EXPECT_EQ(config_to_json(parse_config(once)).dump(), once);
}

TEST(Config, ErrorsCarryJsonPointers) {
  EXPECT_EQ(pointer_of(R"j({"driver": {"kind": "bogus"}})j"), "/driver/kind");
  EXPECT_EQ(pointer_of(R"j({"nope": 1})j"), "/nope");
  EXPECT_EQ(pointer_of(R"j({"driver": {"maps": ["depolarizing(2)"]}})j"), "/driver/maps/0");
  EXPECT_EQ(pointer_of(R"j({"n": -3})j"), "/n");
  EXPECT_EQ(pointer_of(R"j({"seeds": [1, "x"]})j"), "/seeds/1");
  EXPECT_EQ(pointer_of(R"j({"experiment": "dance"})j"), "/experiment");
  EXPECT_EQ(pointer_of(R"j({"probes": {"x": "basis"}})j"), "/probes/x");
  EXPECT_EQ(pointer_of(R"j({"tolerances": {"ks_alpha": "big"}})j"), "/tolerances/ks_alpha");
  EXPECT_EQ(pointer_of("{not json"), "/");
}

TEST(Config, BuildDriverMapsErrorsToDriverPointer) {
  DriverSpec s;
  s.kind = "markov";
  s.maps = {"depolarizing(0.5)", "depolarizing(0.2)"};
  s.transition = {{1.0, 0.0}, {0.0, 1.0}};
  try {
    build_driver(s);
    FAIL();
  } catch (const ConfigError& e) {
    EXPECT_EQ(e.pointer(), "/driver");
  }
  s.transition = {{0.7, 0.3}, {0.1, 0.9}};
  EXPECT_EQ(build_driver(s).kind(), DriverKind::markov);
}

TEST(Format17, RoundTrips) {
  for (double x : {0.1, 1.0 / 3.0, -2.5e-300, 6.02214076e23, std::nextafter(1.0, 2.0)}) {
    EXPECT_EQ(std::stod(format17(x)), x);
  }
  EXPECT_EQ(format17(0.5), "0.5");
}

TEST(Sha256, KnownVector) {
  const auto path = std::filesystem::temp_directory_path() / "eqp_sha_abc.txt";
  std::ofstream(path, std::ios::binary) << "abc";
  EXPECT_EQ(sha256_file(path), "ba7816bf8f01cfea414140de5dae2223b00361a396177a9cb410ff61f20015ad");
  std::filesystem::remove(path);
}
