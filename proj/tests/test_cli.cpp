#include "chfkit/csv.hpp"
#include "chfkit/mlp.hpp"
#include "chfkit/model_io.hpp"

#include <doctest.h>

#include <sys/wait.h>

#include <cmath>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>

namespace fs = std::filesystem;
using namespace chfkit;

namespace {

const fs::path& workdir() {
  static const fs::path dir = [] {
    auto d = fs::temp_directory_path() / ("chfkit_cli_" + std::to_string(::getpid()));
    fs::remove_all(d);
    fs::create_directories(d);
    std::atexit([] { std::error_code ec; fs::remove_all(workdir(), ec); });
    std::ofstream(d / "toy.csv") << "D_mm,L_m,P_kPa,G_kg_m2s,x_e,dh_sub_kJ_kg,T_in_C,chf_kW_m2\n"
                                    "8,1.0,7000,2000,,200,,2500\n"
                                    "10,1.5,10000,3000,,150,,2800\n"
                                    "12,2.0,5000,1500,,100,,2100\n"
                                    "8,0.8,12000,4000,,250,,3100\n"
                                    "9,1.2,8000,2500,,180,,2700\n"
                                    "11,1.8,6000,1800,,120,,2300\n"
                                    "7,0.6,9000,3500,,300,,3500\n"
                                    "10,1.0,11000,2200,,90,,2200\n"
                                    "13,2.5,4000,1000,,60,,1600\n"
                                    "9,1.4,7500,2800,,170,,2600\n";
    return d;
  }();
  return dir;
}

int run_tool(const std::string& args) {
  const std::string cmd = "cd '" + workdir().string() + "' && '" CHFKIT_BIN "' " + args + " >/dev/null 2>&1";
  const int status = std::system(cmd.c_str());
  return WIFEXITED(status) ? WEXITSTATUS(status) : -1;
}

std::string slurp(const fs::path& p) {
  std::ifstream in(workdir() / p, std::ios::binary);
  std::ostringstream s;
  s << in.rdbuf();
  return s.str();
}

std::size_t data_rows(const fs::path& p) {
  const auto text = slurp(p);
  return csv::parse(text).rows.size();
}

std::vector<double> column(const fs::path& p, std::string_view name) {
  const auto text = slurp(p);
  const auto t = csv::parse(text);
  const auto c = csv::column(t, name);
  std::vector<double> out;
  for (const auto& r : t.rows) out.push_back(csv::number(r.cells[c], "test").value_or(NAN));
  return out;
}

// Make sure the split exists before tests that depend on it.
void prepared() {
  static const bool once = [] {
    REQUIRE(run_tool("prepare --input toy.csv --out prep --seed 7") == 0);
    return true;
  }();
  (void)once;
}

} // namespace

TEST_CASE("prepare splits 10 rows 8/1/1 and is reproducible") {
  prepared();
  CHECK(data_rows("prep/train.csv") == 8);
  CHECK(data_rows("prep/validation.csv") == 1);
  CHECK(data_rows("prep/test.csv") == 1);
  REQUIRE(run_tool("prepare --input toy.csv --out prep_again --seed 7") == 0);
  for (const char* f : {"train.csv", "validation.csv", "test.csv", "scaler.csv", "rejected.csv"}) {
    CHECK(slurp(fs::path("prep") / f) == slurp(fs::path("prep_again") / f));
  }
  REQUIRE(run_tool("prepare --input toy.csv --out prep_other --seed 8") == 0);
  CHECK(slurp("prep/train.csv") != slurp("prep_other/train.csv"));
}

TEST_CASE("prepared residual equals measured minus base") {
  prepared();
  const auto chf = column("prep/train.csv", "chf_kW_m2");
  const auto base = column("prep/train.csv", "base_chf_kW_m2");
  const auto res = column("prep/train.csv", "residual_kW_m2");
  for (std::size_t k = 0; k < chf.size(); ++k) CHECK(res[k] == doctest::Approx(chf[k] - base[k]).epsilon(1e-12));
}

TEST_CASE("config file values apply and flags override them") {
  std::ofstream(workdir() / "prep.ini") << "# split settings\nseed=7\nbase=biasi\n[train]\nepochs=3\n";
  REQUIRE(run_tool("prepare --input toy.csv --out prep_cfg --config prep.ini") == 0);
  const auto manifest = slurp("prep_cfg/manifest.json");
  CHECK(manifest.find("base=biasi") != std::string::npos);
  CHECK(manifest.find("seed=7") != std::string::npos);
  REQUIRE(run_tool("prepare --input toy.csv --out prep_cfg2 --config prep.ini --base bowring") == 0);
  CHECK(slurp("prep_cfg2/train.csv") == slurp("prep/train.csv"));
  std::ofstream(workdir() / "bad.ini") << "seed\n";
  CHECK(run_tool("prepare --input toy.csv --out x --config bad.ini") == 2);
}

TEST_CASE("train: loss falls, seeds reproduce, bad mode is a config error") {
  prepared();
  const std::string base = "train --train prep/train.csv --hidden 6,6 --epochs 60 --batch-size 4 --seed 3 ";
  REQUIRE(run_tool(base + "--out m1") == 0);
  REQUIRE(run_tool(base + "--out m2") == 0);
  CHECK(slurp("m1/model.chfmlp") == slurp("m2/model.chfmlp"));
  const auto loss = column("m1/loss_trace.csv", "train_mse");
  REQUIRE(loss.size() == 60);
  CHECK(loss.back() < loss.front());
  CHECK(run_tool("train --train prep/train.csv --mode residual --base none --out m3") == 2);
  CHECK(run_tool("train --train prep/train.csv --mode direct --base bowring --out m3") == 2);
  CHECK(run_tool("train --train prep/train.csv --activation relu --lr0 1e200 --epochs 5 --out m4") == 3);
  CHECK(run_tool("verify-model m1/model.chfmlp --out v1") == 0);
}

TEST_CASE("predict: base kinds need no model, hybrid columns add up") {
  prepared();
  CHECK(run_tool("predict --kind base_bowring --input toy.csv --out p0") == 0);
  CHECK(data_rows("p0/predictions.csv") == 10);
  CHECK(run_tool("predict --kind hybrid_bowring --input toy.csv --out p1") == 2);
  CHECK(run_tool("predict --kind base_bowring --model nothing.chfmlp --input toy.csv --out p1") == 2);
  CHECK(run_tool("predict --kind base_bowring --input missing.csv --out p1") == 1);
  REQUIRE(run_tool("train --train prep/train.csv --hidden 4 --epochs 5 --out mh") == 0);
  REQUIRE(run_tool("predict --kind hybrid_bowring --model mh/model.chfmlp --input toy.csv --out p2") == 0);
  const auto v = column("p2/predictions.csv", "chf_kW_m2");
  const auto b = column("p2/predictions.csv", "base_kW_m2");
  const auto r = column("p2/predictions.csv", "residual_kW_m2");
  for (std::size_t k = 0; k < v.size(); ++k) CHECK(v[k] == doctest::Approx(b[k] + r[k]).epsilon(1e-12));
  // Pure and hybrid kinds must match the model's training mode.
  CHECK(run_tool("predict --kind pure_ml --model mh/model.chfmlp --input toy.csv --out p3") == 2);
  // DSM without a quality column is a per-row failure, not a process failure.
  CHECK(run_tool("predict --kind base_biasi --solve-mode dsm --input toy.csv --out p4") == 0);
  CHECK(std::isnan(column("p4/predictions.csv", "chf_kW_m2")[0]));
}

TEST_CASE("simulate: 60-node profile, tolerated failures, constant-CHF critical power") {
  std::ofstream(workdir() / "cases.csv") << "D_mm,L_m,P_kPa,G_kg_m2s,dh_sub_kJ_kg,q_wall_kW_m2,n_axial\n"
                                            "10,1.5,10000,3000,150,1000,\n"
                                            "10,1.5,10000,3000,150,1000,1\n";
  REQUIRE(run_tool("simulate --cases cases.csv --kind base_bowring --out s1") == 0);
  CHECK(data_rows("s1/profiles/case_1.csv") == 60);
  CHECK(!fs::exists(workdir() / "s1/profiles/case_2.csv"));
  CHECK(slurp("s1/manifest.json").find("\"failed_cases\": 1.0") != std::string::npos);

  // All-zero weights with output bias 1500 kW/m2: CHF is constant, so the
  // critical wall flux is exactly that value.
  const std::size_t hidden[] = {3};
  auto m = make_mlp(5, hidden, Activation::tanh, 1);
  for (auto& l : m.layers) {
    std::fill(l.weights.begin(), l.weights.end(), 0.0);
    std::fill(l.bias.begin(), l.bias.end(), 0.0);
  }
  m.layers.back().bias[0] = 1.5e6;
  m.mode = ModelMode::direct;
  m.base_model = BaseModel::none;
  save_model(m, workdir() / "const.chfmlp");
  REQUIRE(run_tool("simulate --cases cases.csv --kind pure_ml --model const.chfmlp --critical-power --out s2") == 0);
  const auto q = column("s2/summary.csv", "wall_q_kW_m2");
  CHECK(q[0] == doctest::Approx(1500.0).epsilon(1e-5));
  CHECK(run_tool("simulate --cases cases.csv --kind base_bowring --critical-power --q-lo-kW-m2 5 --q-hi-kW-m2 1 "
               "--out s3") == 2);
}

TEST_CASE("evaluate writes reports and rejects misaligned inputs") {
  REQUIRE(run_tool("predict --kind base_bowring --input toy.csv --out pe") == 0);
  REQUIRE(run_tool("evaluate --predictions pe/predictions.csv --truth toy.csv --out e1") == 0);
  for (const char* f : {"report.csv", "report.txt", "parity.csv", "kde.csv"}) CHECK(fs::exists(workdir() / "e1" / f));
  std::ofstream(workdir() / "short.csv") << "chf_kW_m2\n1000\n";
  CHECK(run_tool("evaluate --predictions pe/predictions.csv --truth short.csv --out e2") == 2);
}

TEST_CASE("hullcheck classifies the training rows as inside") {
  prepared();
  REQUIRE(run_tool("hullcheck --train prep/train.csv --query prep/train.csv --out h1") == 0);
  const auto inside = column("h1/verdicts.csv", "inside");
  CHECK(inside.size() == 8);
  for (double v : inside) CHECK(v == 1.0);
  CHECK(data_rows("h1/projection.csv") == 16);
}
