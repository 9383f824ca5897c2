#include <gtest/gtest.h>

#include <sstream>

#include "test_util.hpp"

using namespace mjpbridge;

TEST(ModelJson, DerivesMatricesFromReactions) {
  const Json j = Json::parse(R"({
    "name": "lv-file",
    "species": ["prey", "predator"],
    "reactions": [
      {"name": "birth", "reactants": {"prey": 1}, "products": {"prey": 2}, "rate": 0.5},
      {"name": "predation", "reactants": {"prey": 1, "predator": 1}, "products": {"predator": 2}, "rate": 0.0025},
      {"name": "death", "reactants": {"predator": 1}, "rate": 0.3}
    ],
    "initial_state": {"prey": 50, "predator": 50}
  })");
  const auto m = model_from_json(j);
  const auto ref = lotka_volterra_model();
  EXPECT_EQ(m.network.stoichiometry(), ref.network.stoichiometry());
  EXPECT_EQ(m.network.reactant_orders(), ref.network.reactant_orders());
  EXPECT_EQ(m.rates.values(), ref.rates.values());
  EXPECT_EQ(m.initial_state, ref.initial_state);
  EXPECT_EQ(m.name, "lv-file");
}

TEST(ModelJson, RoundTrip) {
  for (const auto& ref : {death_model(), lotka_volterra_model(), sir_model()}) {
    const auto back = model_from_json(model_to_json(ref));
    EXPECT_EQ(back.network.stoichiometry(), ref.network.stoichiometry()) << ref.name;
    EXPECT_EQ(back.network.reactant_orders(), ref.network.reactant_orders()) << ref.name;
    EXPECT_EQ(back.network.species_names(), ref.network.species_names());
    EXPECT_EQ(back.rates.values(), ref.rates.values());
    EXPECT_EQ(back.initial_state, ref.initial_state);
  }
}

TEST(ModelJson, RejectsBadInput) {
  EXPECT_THROW(model_from_json(Json::parse(R"({"species": ["X"], "reactions": [], "extra": 1})")), ConfigError);
  EXPECT_THROW(model_from_json(Json::parse(R"({"species": ["X"], "reactions": []})")), ConfigError);
  EXPECT_THROW(model_from_json(Json::parse(
                   R"({"species": ["X"], "reactions": [{"reactants": {"Y": 1}, "rate": 1.0}]})")),
               ConfigError);
  EXPECT_THROW(model_from_json(Json::parse(R"({"species": ["X"], "reactions": [{"reactants": {"X": 1}}]})")),
               ConfigError);
  EXPECT_THROW(model_from_json(Json::parse(
                   R"({"species": ["X"], "reactions": [{"reactants": {"X": 1}, "rate": -2.0}]})")),
               ConfigError);
  EXPECT_THROW(model_from_json(Json::parse(
                   R"({"species": ["X"], "reactions": [{"reactants": {"X": 1}, "rate": 1, "kinetics": "hill"}]})")),
               ConfigError);
}

TEST(LoadModel, BundledAndMissingFile) {
  EXPECT_EQ(load_model("sir").name, "sir");
  EXPECT_THROW(load_model("/nonexistent/model.json"), ConfigError);
}

TEST(LoadDataset, BundledEyam) {
  const Dataset d = load_dataset("eyam");
  EXPECT_EQ(d.size(), 8u);
  EXPECT_EQ(d.columns, (std::vector<std::string>{"S", "I"}));
}

TEST(DatasetCsv, RoundTrip) {
  const Dataset d = eyam_data();
  std::stringstream ss;
  d.write_csv(ss);
  const Dataset back = Dataset::read_csv(ss);
  EXPECT_EQ(back.times, d.times);
  ASSERT_EQ(back.size(), d.size());
  for (std::size_t i = 0; i < d.size(); ++i) EXPECT_EQ(back.observations[i], d.observations[i]);
  EXPECT_EQ(back.columns, d.columns);
}

TEST(DatasetCsv, MalformedInputNamesRowAndColumn) {
  auto message = [](const std::string& text) {
    std::istringstream in(text);
    try {
      Dataset::read_csv(in);
    } catch (const ConfigError& e) {
      return std::string(e.what());
    }
    return std::string("no error");
  };
  EXPECT_NE(message("time,S,I\n0,1,2\n0.5,abc,3\n").find("row 3, column 2 ('S')"), std::string::npos);
  EXPECT_NE(message("time,S,I\n0,1\n").find("row 2 has 2 columns"), std::string::npos);
  EXPECT_NE(message("t,S\n0,1\n").find("header"), std::string::npos);
  EXPECT_NE(message("time,S\n1,1\n0.5,2\n").find("strictly increasing"), std::string::npos);
  EXPECT_NE(message("").find("empty"), std::string::npos);
}

TEST(JsonFiles, Errors) {
  EXPECT_THROW(read_json_file("/nonexistent.json"), ConfigError);
  EXPECT_THROW(reject_unknown_keys(Json::array(), {"a"}, "cfg"), ConfigError);
  EXPECT_NO_THROW(reject_unknown_keys(Json{{"a", 1}}, {"a", "b"}, "cfg"));
}
