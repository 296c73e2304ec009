#include <catch2/catch_amalgamated.hpp>

#include <cstdlib>
#include <filesystem>
#include <fstream>

#include "relayar/config.hpp"
#include "relayar/manifest.hpp"
#include "relayar/pipeline.hpp"

using namespace relayar;
using Catch::Approx;

namespace {

std::filesystem::path temp_dir(const std::string& name) {
  auto dir = std::filesystem::temp_directory_path() / "relayar-tests" / name;
  std::filesystem::create_directories(dir);
  return dir;
}

int run_cli(const std::string& args) {
#ifdef RELAYAR_CLI_PATH
  const std::string cmd = std::string(RELAYAR_CLI_PATH) + " " + args + " >/dev/null 2>&1";
  const int rc = std::system(cmd.c_str());
  return WEXITSTATUS(rc);
#else
  (void)args;
  return -1;
#endif
}

}  // namespace

TEST_CASE("config parses sections, comments, and typed values") {
  const auto cfg = config::KvConfig::parse_string(
      "# comment\n[pipeline]\nfs = 3840\nsmote = off\n\n[gwo]\npopulation = 12  # trailing\n");
  CHECK(cfg.get_double("pipeline", "fs", 0) == 3840.0);
  CHECK(cfg.get_bool("pipeline", "smote", true) == false);
  CHECK(cfg.get_int("gwo", "population", 0) == 12);
  CHECK(cfg.get_string("pipeline", "missing", "dflt") == "dflt");
  CHECK_THROWS(cfg.require("pipeline", "missing"));
  CHECK_THROWS(config::KvConfig::parse_string("[oops\nk = v\n"));
  CHECK_THROWS(config::KvConfig::parse_string("novalue\n"));
}

TEST_CASE("config hash is stable under reordering and comments") {
  const auto a = config::KvConfig::parse_string("[b]\ny = 2\n[a]\nx = 1\n");
  const auto b = config::KvConfig::parse_string("# hi\n[a]\nx = 1\n[b]\ny = 2\n");
  CHECK(a.hash() == b.hash());
  const auto c = config::KvConfig::parse_string("[a]\nx = 2\n[b]\ny = 2\n");
  CHECK(a.hash() != c.hash());
}

TEST_CASE("pipeline config resolves defaults and feature names") {
  const auto kv = config::KvConfig::parse_string("[pipeline]\nseed = 9\nend_mode = double\n");
  const auto cfg = config::PipelineConfig::from(kv);
  CHECK(cfg.double_end);
  CHECK(cfg.seed == 9);
  CHECK(cfg.selected_features == std::vector<int>{4, 7, 8});  // ar_coeff_2/5/6
  CHECK(cfg.classifiers.size() == 3);
  CHECK(cfg.gwo.population == 30);
  CHECK(cfg.gwo.max_iter == 100);
  CHECK_THROWS(config::PipelineConfig::from(config::KvConfig::parse_string("[pipeline]\nend_mode = sideways\n")));
}

TEST_CASE("manifest round-trips through CSV") {
  manifest::Manifest m;
  manifest::ManifestRow r;
  r.case_id = "f000001";
  r.spec.kind = waveform::EventKind::fault;
  r.spec.fault_type = waveform::FaultType::bcg;
  r.spec.inception_angle_deg = 120.0;
  r.spec.resistance = waveform::ResistanceClass::mid;
  r.spec.off_nominal_hz = 72.0;
  r.spec.dc_decay_tau = 0.02;
  r.spec.snr_db = 20.0;
  r.spec.sync_delay_ms = 1.0;
  r.spec.location = 5;
  r.onset_sample = 768;
  r.label_detection = "fault";
  r.label_region = "internal";
  r.label_location = "loc5";
  r.label_phase = "bc";
  r.label_faulttype = "bcg";
  m.rows.push_back(r);
  manifest::ManifestRow n;
  n.case_id = "n000001";
  n.spec.kind = waveform::EventKind::capacitor_switch;
  n.label_detection = "nonfault";
  m.rows.push_back(n);

  const auto path = temp_dir("manifest") / "manifest.csv";
  manifest::write_csv(m, path.string());
  const auto back = manifest::load_csv(path.string(), false);
  REQUIRE(back.rows.size() == 2);
  CHECK(back.rows[0].case_id == "f000001");
  CHECK(back.rows[0].spec.fault_type == waveform::FaultType::bcg);
  CHECK(back.rows[0].spec.snr_db.has_value());
  CHECK(*back.rows[0].spec.snr_db == 20.0);
  CHECK(back.rows[0].onset_sample == 768);
  CHECK(back.rows[0].label(classify::Task::region) == 0);
  CHECK_FALSE(back.rows[1].label(classify::Task::region).has_value());

  // write -> read -> write is byte-identical
  const auto path2 = temp_dir("manifest") / "manifest2.csv";
  manifest::write_csv(back, path2.string());
  std::ifstream f1(path), f2(path2);
  std::stringstream s1, s2;
  s1 << f1.rdbuf();
  s2 << f2.rdbuf();
  CHECK(s1.str() == s2.str());
}

TEST_CASE("manifest rejects duplicates, bad labels, and missing files") {
  const auto dir = temp_dir("manifest-bad");
  const auto write_lines = [&](const std::string& name, const std::string& body) {
    const auto p = dir / name;
    std::ofstream out(p);
    out << manifest::csv_header() << '\n' << body;
    return p.string();
  };
  const auto dup = write_lines("dup.csv",
                               "c1,,,steady,ag,0,low,60,0.02,,,,5,0,,nonfault,,,,\n"
                               "c1,,,steady,ag,0,low,60,0.02,,,,5,0,,nonfault,,,,\n");
  CHECK_THROWS_WITH(manifest::load_csv(dup, false), Catch::Matchers::ContainsSubstring("duplicate"));
  const auto bad = write_lines("bad.csv", "c1,,,steady,ag,0,low,60,0.02,,,,5,0,,sideways,,,,\n");
  CHECK_THROWS(manifest::load_csv(bad, false));
  const auto missing = write_lines("missing.csv", "c1,nosuch.csv,,steady,ag,0,low,60,0.02,,,,5,0,,nonfault,,,,\n");
  CHECK_THROWS_WITH(manifest::load_csv(missing, true), Catch::Matchers::ContainsSubstring("missing record file"));
}

TEST_CASE("grid enumeration counts are cartesian products") {
  pipeline::GridSpec g;
  using FT = waveform::FaultType;
  g.fault_types = {FT::ag, FT::bg, FT::cg, FT::ab, FT::bc, FT::ca, FT::abg, FT::bcg, FT::cag, FT::abcg};
  g.resistances = {waveform::ResistanceClass::low, waveform::ResistanceClass::mid, waveform::ResistanceClass::high};
  g.inception_angles = {0.0, 180.0};
  g.transformers = {0};
  g.off_nominals = {48.0};
  g.locations = {5};
  g.nonfault_kinds = {};
  g.nonfault_angles = {0.0};
  g.nonfault_variants = 0;
  CHECK(g.fault_count() == 60);
  const auto m = pipeline::enumerate_grid(g);
  CHECK(m.rows.size() == 60);
  CHECK(m.rows[0].label_detection == "fault");
  CHECK(m.rows[0].label_region == "internal");
}

TEST_CASE("grid config parsing rejects an empty axis") {
  const auto kv = config::KvConfig::parse_string("[faults]\ntypes = ag\nresistances = \n");
  CHECK_THROWS_WITH(pipeline::GridSpec::from(kv), Catch::Matchers::ContainsSubstring("axis"));
}

TEST_CASE("features CSV writes and reads back with undefined cells empty") {
  pipeline::GridSpec g;
  g.fault_types = {waveform::FaultType::ag};
  g.resistances = {waveform::ResistanceClass::low};
  g.inception_angles = {0.0};
  g.transformers = {0};
  g.off_nominals = {72.0};
  g.locations = {5};
  g.nonfault_kinds = {waveform::EventKind::capacitor_switch};
  g.nonfault_angles = {0.0, 90.0};
  g.nonfault_variants = 1;
  const auto corpus = pipeline::build_corpus(g);
  auto cfg = config::PipelineConfig::from(config::KvConfig{});
  const auto dir = temp_dir("features");
  const std::vector<int> ids = {1, 4, 140, 142};
  pipeline::write_features_csv(corpus, cfg, ids, (dir / "features.csv").string());
  const auto table = pipeline::read_features_csv((dir / "features.csv").string());
  CHECK(table.names == std::vector<std::string>{"abs_energy", "ar_coeff_2", "variation_coeff", "zero_seq_mag"});
  CHECK(table.case_ids.size() == 3);
  const auto& first = table.by_case.at(table.case_ids.front());
  CHECK(first[0][0].has_value());               // abs_energy defined
  CHECK_FALSE(first[0][3].has_value());         // zero_seq needs a full cycle; window is 0.5
}

TEST_CASE("stratified split is deterministic and class-proportional") {
  std::vector<int> y;
  for (int i = 0; i < 100; ++i) y.push_back(i < 70 ? 0 : 1);
  const auto s1 = pipeline::stratified_split(y, 0.3, 5);
  const auto s2 = pipeline::stratified_split(y, 0.3, 5);
  CHECK(s1.train == s2.train);
  CHECK(s1.test == s2.test);
  CHECK(s1.test.size() == 30);
  std::size_t minority_test = 0;
  for (std::size_t i : s1.test) minority_test += y[i] == 1 ? 1 : 0;
  CHECK(minority_test == 9);  // 30% of 30
}

TEST_CASE("evaluation report JSON and confusion CSV carry the documented fields") {
  classify::EvalReport rep;
  rep.accuracy = 0.9;
  rep.ci_lo = 0.8412;
  rep.ci_hi = 0.9588;
  rep.n_test = 100;
  rep.confusion = {{45, 5}, {5, 45}};
  rep.per_class_recall = {0.9, 0.9};
  const auto j = pipeline::report_json(rep, classify::Task::detection, 0xabcdULL);
  CHECK(j["task"] == "detection");
  CHECK(j["n_test"] == 100);
  CHECK(j["labels"][1] == "fault");
  CHECK(j["config_hash"].get<std::string>().substr(0, 2) == "0x");
  const auto path = temp_dir("report") / "confusion.csv";
  pipeline::write_confusion_csv(rep, classify::Task::detection, path.string());
  std::ifstream in(path);
  std::string line;
  std::getline(in, line);
  CHECK(line == "true\\pred,nonfault,fault");
  std::getline(in, line);
  CHECK(line == "nonfault,45,5");
}

#ifdef RELAYAR_CLI_PATH
TEST_CASE("CLI exit codes: 2 for usage errors, 1 for operational failures") {
  CHECK(run_cli("definitely-not-a-command") == 2);
  CHECK(run_cli("generate") == 2);  // missing required options
  CHECK(run_cli("detect --manifest /nonexistent/manifest.csv --out /dev/null") == 1);
  CHECK(run_cli("--help") == 0);
}

TEST_CASE("CLI failures print a single machine-parsable error line") {
  const auto dir = temp_dir("cli-err");
  const auto err_path = dir / "stderr.txt";
  const std::string cmd = std::string(RELAYAR_CLI_PATH) +
                          " detect --manifest /nonexistent/manifest.csv --out /dev/null 2> " + err_path.string() +
                          " >/dev/null";
  (void)std::system(cmd.c_str());
  std::ifstream in(err_path);
  std::string line;
  std::size_t lines = 0;
  std::string first;
  while (std::getline(in, line)) {
    if (lines++ == 0) first = line;
  }
  CHECK(lines == 1);
  CHECK(first.rfind("relayar: error: ", 0) == 0);
}

TEST_CASE("CLI generate/detect/extract round trip on a tiny grid") {
  const auto dir = temp_dir("cli-tiny");
  const auto grid_path = dir / "grid.cfg";
  {
    std::ofstream out(grid_path);
    out << "[grid]\nmaster_seed = 3\n[faults]\ntypes = ag,bc\nresistances = low\ninception_angles = 0\n"
        << "transformers = 0\noff_nominal_hz = 72\nlocations = 5\n[nonfaults]\nkinds = load_switch\n"
        << "angles = 0,90\nvariants = 1\n";
  }
  const auto out_dir = dir / "corpus";
  REQUIRE(run_cli("generate --grid " + grid_path.string() + " --out " + out_dir.string()) == 0);
  REQUIRE(std::filesystem::exists(out_dir / "manifest.csv"));
  const auto m = manifest::load_csv((out_dir / "manifest.csv").string(), true);
  CHECK(m.rows.size() == 4);

  REQUIRE(run_cli("detect --manifest " + (out_dir / "manifest.csv").string() + " --out " +
                  (dir / "detections.csv").string()) == 0);
  std::ifstream det(dir / "detections.csv");
  std::string header;
  std::getline(det, header);
  CHECK(header == "case_id,phase,sample_index,dd_value");

  REQUIRE(run_cli("extract --manifest " + (out_dir / "manifest.csv").string() + " --out " +
                  (dir / "features.csv").string()) == 0);
  const auto table = pipeline::read_features_csv((dir / "features.csv").string());
  CHECK(table.case_ids.size() == 4);
}
#endif
