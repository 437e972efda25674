#include "commands.hpp"

#include "config.hpp"

#include "chfkit/channel.hpp"
#include "chfkit/csv.hpp"
#include "chfkit/dataset.hpp"
#include "chfkit/domain.hpp"
#include "chfkit/errors.hpp"
#include "chfkit/evaluation.hpp"
#include "chfkit/hybrid.hpp"
#include "chfkit/if97.hpp"
#include "chfkit/model_io.hpp"
#include "chfkit/rng.hpp"
#include "chfkit/training.hpp"
#include "chfkit/tuning.hpp"

#include <CLI11.hpp>

#include <algorithm>
#include <cmath>
#include <filesystem>
#include <iostream>
#include <numeric>
#include <optional>

namespace fs = std::filesystem;

namespace chfkit::cli {

namespace {

Correlation correlation_of(BaseModel b) {
  if (b == BaseModel::biasi) return Correlation::biasi;
  if (b == BaseModel::bowring) return Correlation::bowring;
  throw ConfigError("base model 'none' has no correlation");
}

BaseModel base_of(const std::string& s) {
  try {
    return base_model_from_string(s);
  } catch (const ValidationError& e) {
    throw ConfigError(e.what());
  }
}

// Reads an optional numeric column of a CSV, one value per data row.
std::optional<std::vector<std::optional<double>>> optional_column(const std::string& text, std::string_view name) {
  const auto t = csv::parse(text);
  std::size_t col = t.header.size();
  for (std::size_t k = 0; k < t.header.size(); ++k) {
    if (t.header[k] == name) col = k;
  }
  if (col == t.header.size()) return std::nullopt;
  std::vector<std::optional<double>> out;
  for (std::size_t r = 0; r < t.rows.size(); ++r) {
    out.push_back(csv::number(t.rows[r].cells[col], "row " + std::to_string(r + 1) + "." + std::string(name)));
  }
  return out;
}

std::string fmt(double v) { return csv::format(v); }

// ---------------------------------------------------------------- prepare

struct PrepareArgs {
  std::string input;
  std::string out = "out/prepare";
  std::string base = "bowring";
  std::uint64_t seed = 0;
  bool strict = true;
  std::vector<double> env_d_mm, env_l_m, env_p_kpa, env_g, env_xe, env_dh_kj_kg, env_chf_kw_m2;
};

void apply_range(Range& r, const std::vector<double>& v, double unit, const char* name) {
  if (v.empty()) return;
  if (v.size() != 2 || !(v[0] <= v[1])) throw ConfigError(std::string("envelope ") + name + " needs lo <= hi");
  r = {v[0] * unit, v[1] * unit};
}

int cmd_prepare(const PrepareArgs& a, const std::string& resolved) {
  Manifest man("prepare", resolved);
  IngestOptions opts;
  opts.strict = a.strict;
  apply_range(opts.envelope.diameter, a.env_d_mm, 1e-3, "D_mm");
  apply_range(opts.envelope.heated_length, a.env_l_m, 1.0, "L_m");
  apply_range(opts.envelope.pressure, a.env_p_kpa, 1e3, "P_kPa");
  apply_range(opts.envelope.mass_flux, a.env_g, 1.0, "G_kg_m2s");
  apply_range(opts.envelope.exit_quality, a.env_xe, 1.0, "x_e");
  apply_range(opts.envelope.inlet_subcooling, a.env_dh_kj_kg, 1e3, "dh_sub_kJ_kg");
  apply_range(opts.envelope.chf, a.env_chf_kw_m2, 1e3, "chf_kW_m2");
  const auto base = base_of(a.base);

  auto in = ingest(a.input, opts);
  const fs::path out = a.out;
  std::string rej = "row,reason\n";
  for (const auto& r : in.rejected) rej += std::to_string(r.row) + ",\"" + r.reason + "\"\n";
  man.write_output(out / "rejected.csv", rej);
  std::string flag = "row,reason\n";
  for (const auto& r : in.flagged) flag += std::to_string(r.row) + ",\"" + r.reason + "\"\n";
  man.write_output(out / "flagged.csv", flag);

  std::vector<ChfRecord> records;
  std::vector<double> base_chf;
  std::size_t failures = 0;
  if (base == BaseModel::none) {
    records = in.records;
  } else {
    const auto res = build_residual_dataset(in.records, correlation_of(base));
    std::string fail = "row,reason\n";
    for (const auto& f : res.failures) {
      fail += std::to_string(in.source_rows[f.index]) + ",\"" + f.reason + "\"\n";
    }
    man.write_output(out / "hbm_failures.csv", fail);
    failures = res.failures.size();
    std::size_t next_failure = 0;
    for (std::size_t k = 0, j = 0; k < in.records.size(); ++k) {
      if (next_failure < res.failures.size() && res.failures[next_failure].index == k) {
        ++next_failure;
        continue;
      }
      records.push_back(in.records[k]);
      base_chf.push_back(res.records[j++].base_chf);
    }
  }
  if (records.size() < 3) {
    throw std::runtime_error("need at least 3 usable records to split, got " + std::to_string(records.size()));
  }

  // Residuals come first, then the shuffle; the permutation is the one
  // split_dataset applies.
  std::vector<std::size_t> order(records.size());
  std::iota(order.begin(), order.end(), std::size_t{0});
  Rng rng(a.seed);
  rng.shuffle(std::span<std::size_t>(order));
  const auto sizes = split_sizes(records.size());

  auto write_part = [&](const std::string& name, std::size_t from, std::size_t to) {
    std::vector<ChfRecord> part;
    for (std::size_t k = from; k < to; ++k) part.push_back(records[order[k]]);
    std::string text = format_chf_csv(part);
    if (!base_chf.empty()) {
      // Append base and residual columns line by line.
      std::string with;
      std::size_t line = 0, pos = 0;
      while (pos < text.size()) {
        const auto nl = text.find('\n', pos);
        with += text.substr(pos, nl - pos);
        if (line == 0) {
          with += ",base_chf_kW_m2,residual_kW_m2";
        } else {
          const std::size_t idx = order[from + line - 1];
          with += ',' + fmt(base_chf[idx] / 1000.0) + ',' + fmt((records[idx].measured_chf - base_chf[idx]) / 1000.0);
        }
        with += '\n';
        pos = nl + 1;
        ++line;
      }
      text = std::move(with);
    }
    man.write_output(out / name, text);
    return part;
  };
  const auto train = write_part("train.csv", 0, sizes.train);
  write_part("validation.csv", sizes.train, sizes.train + sizes.validation);
  write_part("test.csv", sizes.train + sizes.validation, records.size());

  const auto fit = fit_scaler(train);
  std::string sc = "feature,mean,std\n";
  const auto names = default_feature_names();
  for (std::size_t k = 0; k < names.size(); ++k) {
    sc += names[k] + ',' + fmt(fit.scaler.mean[k]) + ',' + fmt(fit.scaler.std[k]) + '\n';
  }
  man.write_output(out / "scaler.csv", sc);
  for (const auto& w : fit.warnings) std::cerr << "warning: " << w << '\n';

  man.set("rows_accepted", static_cast<double>(in.records.size()));
  man.set("rows_rejected", static_cast<double>(in.rejected.size()));
  man.set("rows_flagged", static_cast<double>(in.flagged.size()));
  man.set("hbm_failures", static_cast<double>(failures));
  man.set("train_rows", static_cast<double>(sizes.train));
  man.set("validation_rows", static_cast<double>(sizes.validation));
  man.set("test_rows", static_cast<double>(sizes.test));
  man.save(out / "manifest.json");
  std::cout << "prepared " << records.size() << " records: " << sizes.train << " train, " << sizes.validation
            << " validation, " << sizes.test << " test; " << in.rejected.size() << " rejected, " << failures
            << " HBM failures\n";
  return kOk;
}

// ------------------------------------------------------------ train/tune

struct ModelArgs {
  std::string mode = "residual";
  std::string base = "bowring";
};

void check_mode(const ModelArgs& m) {
  const bool residual = m.mode == "residual";
  if (m.mode != "residual" && m.mode != "direct") throw ConfigError("mode must be direct or residual");
  const auto b = base_of(m.base);
  if (residual && b == BaseModel::none) throw ConfigError("mode=residual requires base=biasi or base=bowring");
  if (!residual && b != BaseModel::none) throw ConfigError("mode=direct requires base=none");
}

struct Targets {
  Matrix x;
  std::vector<double> y;
  std::size_t dropped = 0;
};

// Raw features and physical-unit targets from a prepared CSV.
Targets load_targets(const std::string& path, const ModelArgs& m) {
  const auto text = csv::read_file(path);
  IngestOptions keep;
  keep.strict = false;
  const auto in = parse_chf_csv(text, keep);
  Targets t;
  if (m.mode == "direct") {
    for (const auto& r : in.records) {
      t.x.append_row(r.features());
      t.y.push_back(r.measured_chf);
    }
    return t;
  }
  const auto col = optional_column(text, "residual_kW_m2");
  if (col) {
    for (std::size_t k = 0; k < in.records.size(); ++k) {
      const auto& v = (*col)[in.source_rows[k] - 1];
      if (!v) {
        ++t.dropped;
        continue;
      }
      t.x.append_row(in.records[k].features());
      t.y.push_back(*v * 1000.0);
    }
    return t;
  }
  const auto res = build_residual_dataset(in.records, correlation_of(base_of(m.base)));
  for (const auto& r : res.records) {
    t.x.append_row(r.features);
    t.y.push_back(r.residual);
  }
  t.dropped = res.failures.size();
  return t;
}

struct Standardized {
  Scaler in, out;
  TrainData data;
};

Standardized standardize(const Targets& t, const Scaler* in = nullptr, const Scaler* out = nullptr) {
  Standardized s;
  if (in) {
    s.in = *in;
    s.out = *out;
  } else {
    s.in = fit_scaler(t.x).scaler;
    Matrix ym;
    for (double v : t.y) ym.append_row(std::vector<double>{v});
    s.out = fit_scaler(ym).scaler;
  }
  for (std::size_t r = 0; r < t.x.rows(); ++r) {
    std::vector<double> z(t.x.cols());
    s.in.transform(t.x.row(r), z);
    s.data.x.append_row(z);
    s.data.y.push_back(s.out.transform1(t.y[r]));
  }
  return s;
}

struct TrainArgs {
  std::string train, validation;
  std::string out = "out/train";
  ModelArgs model;
  std::string hidden = "44,64,41,26,67,10,17";
  std::string activation = "tanh";
  TrainConfig cfg;
};

int cmd_train(const TrainArgs& a, const std::string& resolved) {
  check_mode(a.model);
  a.cfg.validate();
  const auto widths = parse_widths(a.hidden);
  Activation act;
  try {
    act = activation_from_string(a.activation);
  } catch (const ValidationError& e) {
    throw ConfigError(e.what());
  }
  Manifest man("train", resolved);
  const auto targets = load_targets(a.train, a.model);
  if (targets.y.size() < 2) throw ConfigError("training file has fewer than 2 usable rows");
  auto s = standardize(targets);
  std::optional<Standardized> val;
  if (!a.validation.empty()) val = standardize(load_targets(a.validation, a.model), &s.in, &s.out);

  auto m = make_mlp(5, widths, act, a.cfg.seed);
  m.input_scaler = s.in;
  m.output_scaler = s.out;
  m.mode = mode_from_string(a.model.mode);
  m.base_model = base_of(a.model.base);

  Trainer trainer(m, a.cfg);
  std::string trace = val ? "epoch,lr,train_mse,validation_mse\n" : "epoch,lr,train_mse\n";
  for (int e = 0; e < a.cfg.epochs; ++e) {
    const double lr = trainer.learning_rate();
    const double loss = trainer.run_epoch(s.data);
    trace += std::to_string(e) + ',' + fmt(lr) + ',' + fmt(loss);
    if (val) trace += ',' + fmt(mean_squared_error(trainer.model(), val->data));
    trace += '\n';
  }
  const fs::path out = a.out;
  man.write_output(out / "model.chfmlp", serialize_model(trainer.model()));
  man.write_output(out / "loss_trace.csv", trace);
  man.set("train_rows", static_cast<double>(targets.y.size()));
  man.set("rows_dropped", static_cast<double>(targets.dropped));
  man.set("parameters", static_cast<double>(trainer.model().parameter_count()));
  man.set("final_train_mse", trainer.loss_trace().back());
  man.save(out / "manifest.json");
  std::cout << "trained " << trainer.model().parameter_count() << " parameters for " << a.cfg.epochs
            << " epochs; final standardized MSE " << trainer.loss_trace().back() << '\n';
  return kOk;
}

struct TuneArgs {
  std::string train;
  std::string out = "out/tune";
  ModelArgs model;
  int trials = 27;
  TuneOptions opts;
  int final_epochs = 500;
};

int cmd_tune(const TuneArgs& a, const std::string& resolved) {
  check_mode(a.model);
  if (a.trials < 1) throw ConfigError("trials must be >= 1");
  Manifest man("tune", resolved);
  const auto s = standardize(load_targets(a.train, a.model));
  const auto cands = sample_candidates(SearchSpace{}, a.trials, a.opts.seed);
  const auto r = tune(cands, s.data, a.opts);

  std::string list = "candidate,hidden,activation,batch_size,lr0\n";
  for (std::size_t k = 0; k < cands.size(); ++k) {
    std::string h;
    for (auto w : cands[k].hidden) h += (h.empty() ? "" : " ") + std::to_string(w);
    list += std::to_string(k) + ',' + h + ',' + std::string(to_string(cands[k].activation)) + ',' +
            std::to_string(cands[k].batch_size) + ',' + fmt(cands[k].lr0) + '\n';
  }
  std::string hist = "rung,candidate,epochs,validation_mse\n";
  for (const auto& h : r.history) {
    hist += std::to_string(h.rung) + ',' + std::to_string(h.candidate) + ',' + std::to_string(h.epochs) + ',' +
            fmt(h.validation_loss) + '\n';
  }
  std::string hidden;
  for (auto w : r.best.hidden) hidden += (hidden.empty() ? "" : ",") + std::to_string(w);
  const std::string best = "; best tuned configuration, usable as: chfkit train --config best.ini\n"
                           "hidden=\"" + hidden + "\"\nactivation=" + std::string(to_string(r.best.activation)) +
                           "\nbatch-size=" + std::to_string(r.best.batch_size) + "\nlr0=" + fmt(r.best.lr0) +
                           "\ndecay-rate=" + fmt(a.opts.decay_rate) + "\nepochs=" + std::to_string(a.final_epochs) +
                           "\nmode=" + a.model.mode + "\nbase=" + a.model.base + "\n";
  const fs::path out = a.out;
  man.write_output(out / "candidates.csv", list);
  man.write_output(out / "tune_history.csv", hist);
  man.write_output(out / "best.ini", best);
  man.set("best_candidate", static_cast<double>(r.best_index));
  man.set("best_validation_mse", r.best_validation_loss);
  man.set("epochs_used", static_cast<double>(r.epochs_used));
  man.save(out / "manifest.json");
  std::cout << "best candidate " << r.best_index << " (" << hidden << ", " << to_string(r.best.activation)
            << ") validation MSE " << r.best_validation_loss << " after " << r.epochs_used << " epochs\n";
  return kOk;
}

// ----------------------------------------------------------- predict/simulate

struct PredictorArgs {
  std::string kind = "hybrid_bowring";
  std::string model;
  std::string solve_mode = "hbm";
};

ChfPredictor make_predictor(const PredictorArgs& a) {
  PredictorKind kind;
  SolveMode mode;
  try {
    kind = predictor_kind_from_string(a.kind);
    mode = solve_mode_from_string(a.solve_mode);
  } catch (const ValidationError& e) {
    throw ConfigError(e.what());
  }
  const bool needs_model = kind == PredictorKind::pure_ml || kind == PredictorKind::hybrid_biasi ||
                           kind == PredictorKind::hybrid_bowring;
  if (!needs_model) {
    if (!a.model.empty()) throw ConfigError(a.kind + " takes no model file");
    return ChfPredictor(kind, std::nullopt, mode);
  }
  if (a.model.empty()) throw ConfigError(a.kind + " requires --model");
  auto m = load_model(a.model);
  if (m.input_features != default_feature_names()) {
    throw ConfigError("model features do not match the expected D_m, L_m, P_Pa, G_kg_m2s, dh_sub_J_kg");
  }
  try {
    return ChfPredictor(kind, std::move(m), mode);
  } catch (const ValidationError& e) {
    throw ConfigError(e.what());
  }
}

struct FeatureRow {
  PredictionInput in;
  std::string error;
};

// D_mm, L_m, P_kPa, G_kg_m2s plus dh_sub_kJ_kg or T_in_C; x_e optional.
std::vector<FeatureRow> parse_features(const std::string& text) {
  const auto t = csv::parse(text);
  auto find = [&](std::string_view n) -> std::optional<std::size_t> {
    for (std::size_t k = 0; k < t.header.size(); ++k) {
      if (t.header[k] == n) return k;
    }
    return std::nullopt;
  };
  const std::size_t cd = csv::column(t, "D_mm"), cl = csv::column(t, "L_m"), cp = csv::column(t, "P_kPa"),
                    cg = csv::column(t, "G_kg_m2s");
  const auto cdh = find("dh_sub_kJ_kg"), ct = find("T_in_C"), cx = find("x_e");
  if (!cdh && !ct) throw ParseError("missing column 'dh_sub_kJ_kg' or 'T_in_C'", 0, "dh_sub_kJ_kg");
  std::vector<FeatureRow> out;
  for (std::size_t r = 0; r < t.rows.size(); ++r) {
    const auto& cells = t.rows[r].cells;
    const std::string row = "row " + std::to_string(r + 1) + ".";
    auto num = [&](std::optional<std::size_t> c, const char* name) -> std::optional<double> {
      if (!c) return std::nullopt;
      return csv::number(cells[*c], row + name);
    };
    FeatureRow f{};
    const auto d = num(cd, "D_mm"), l = num(cl, "L_m"), p = num(cp, "P_kPa"), g = num(cg, "G_kg_m2s");
    const auto dh = num(cdh, "dh_sub_kJ_kg"), tin = num(ct, "T_in_C");
    f.in.local_quality = num(cx, "x_e");
    if (!d || !l || !p || !g || (!dh && !tin)) {
      f.error = "missing input value";
      out.push_back(f);
      continue;
    }
    f.in.inlet = {*d / 1000.0, *l, *p * 1000.0, *g, 0.0};
    try {
      f.in.inlet.inlet_subcooling = dh ? *dh * 1000.0 : if97::subcooling_from_inlet_temp(*p * 1000.0, *tin + 273.15);
    } catch (const std::exception& e) {
      f.error = e.what();
    }
    out.push_back(f);
  }
  return out;
}

struct PredictArgs {
  PredictorArgs pred;
  std::string input;
  std::string out = "out/predict";
};

int cmd_predict(const PredictArgs& a, const std::string& resolved) {
  const auto predictor = make_predictor(a.pred);
  Manifest man("predict", resolved);
  const auto rows = parse_features(csv::read_file(a.input));
  std::vector<Prediction> preds(rows.size());
  std::vector<std::string> errors(rows.size());
  const auto n = static_cast<std::ptrdiff_t>(rows.size());
#pragma omp parallel for schedule(dynamic, 16)
  for (std::ptrdiff_t k = 0; k < n; ++k) {
    const auto i = static_cast<std::size_t>(k);
    errors[i] = rows[i].error;
    if (!errors[i].empty()) continue;
    try {
      preds[i] = predictor.predict(rows[i].in);
    } catch (const std::exception& e) {
      errors[i] = e.what();
    }
  }
  std::string text = "row,chf_kW_m2,base_kW_m2,residual_kW_m2,outside_validity,error\n";
  std::size_t failed = 0;
  for (std::size_t i = 0; i < rows.size(); ++i) {
    text += std::to_string(i + 1) + ',';
    if (!errors[i].empty()) {
      ++failed;
      std::string e = errors[i];
      for (auto& ch : e) {
        if (ch == ',' || ch == '\n' || ch == '"') ch = ';';
      }
      text += ",,,," + e + '\n';
      continue;
    }
    const auto& p = preds[i];
    text += fmt(p.value / 1000.0) + ',' + fmt(p.base / 1000.0) + ',' + fmt(p.residual / 1000.0) + ',' +
            (p.outside_validity ? "1" : "0") + ",\n";
  }
  const fs::path out = a.out;
  man.write_output(out / "predictions.csv", text);
  man.set("rows", static_cast<double>(rows.size()));
  man.set("failed_rows", static_cast<double>(failed));
  man.save(out / "manifest.json");
  std::cout << "predicted " << rows.size() - failed << " of " << rows.size() << " rows\n";
  return kOk;
}

struct SimulateArgs {
  PredictorArgs pred;
  std::string cases;
  std::string out = "out/simulate";
  bool critical_power = false;
  double q_lo_kw_m2 = 10.0;
  double q_hi_kw_m2 = 50000.0;
};

int cmd_simulate(const SimulateArgs& a, const std::string& resolved) {
  const auto predictor = make_predictor(a.pred);
  if (a.critical_power && !(a.q_lo_kw_m2 > 0.0 && a.q_hi_kw_m2 > a.q_lo_kw_m2)) {
    throw ConfigError("critical power bracket needs 0 < q-lo < q-hi");
  }
  Manifest man("simulate", resolved);
  const auto cases = parse_channel_csv(csv::read_file(a.cases));
  const auto chf = node_chf(predictor);

  struct Outcome {
    AxialProfile profile;
    std::optional<CriticalPower> critical;
    std::string error;
  };
  std::vector<Outcome> res(cases.size());
  const auto n = static_cast<std::ptrdiff_t>(cases.size());
#pragma omp parallel for schedule(dynamic)
  for (std::ptrdiff_t k = 0; k < n; ++k) {
    auto& o = res[static_cast<std::size_t>(k)];
    auto c = cases[static_cast<std::size_t>(k)];
    try {
      if (a.critical_power) {
        o.critical = find_critical_power(c, chf, a.q_lo_kw_m2 * 1e3, a.q_hi_kw_m2 * 1e3);
        c.wall_heat_flux = o.critical->wall_heat_flux;
      }
      o.profile = solve_channel(c, chf);
    } catch (const std::exception& e) {
      o.error = e.what();
    }
  }
  const fs::path out = a.out;
  std::string summary = "case,wall_q_kW_m2,min_dnbr,limiting_node,exit_chf_kW_m2,clamped_nodes,error\n";
  std::size_t failed = 0;
  for (std::size_t k = 0; k < res.size(); ++k) {
    const auto& o = res[k];
    summary += std::to_string(k + 1) + ',';
    if (!o.error.empty()) {
      ++failed;
      std::string e = o.error;
      for (auto& ch : e) {
        if (ch == ',' || ch == '\n' || ch == '"') ch = ';';
      }
      summary += ",,,,," + e + '\n';
      std::cerr << "case " << k + 1 << " failed: " << o.error << '\n';
      continue;
    }
    const auto& p = o.profile;
    std::size_t clamped = 0;
    for (const auto& node : p.nodes) clamped += node.clamped;
    summary += fmt(p.wall_heat_flux / 1000.0) + ',' +
               (std::isinf(p.min_dnbr()) ? std::string("inf") : fmt(p.min_dnbr())) + ',' +
               std::to_string(p.min_dnbr_node) + ',' + fmt(extract_chf(p, p.nodes.size() - 1) / 1000.0) + ',' +
               std::to_string(clamped) + ",\n";
    man.write_output(out / "profiles" / ("case_" + std::to_string(k + 1) + ".csv"), format_profile(p));
  }
  man.write_output(out / "summary.csv", summary);
  man.set("cases", static_cast<double>(cases.size()));
  man.set("failed_cases", static_cast<double>(failed));
  man.save(out / "manifest.json");
  std::cout << "simulated " << cases.size() - failed << " of " << cases.size() << " cases\n";
  return kOk;
}

// ---------------------------------------------------------------- evaluate

struct EvaluateArgs {
  std::string predictions, truth;
  std::string pred_column = "chf_kW_m2";
  std::string truth_column = "chf_kW_m2";
  std::string label = "model";
  double trim_quantile = 0.995;
  std::vector<double> kde_window_pct;
  std::string out = "out/evaluate";
};

std::vector<std::optional<double>> required_column(const std::string& path, const std::string& name) {
  auto col = optional_column(csv::read_file(path), name);
  if (!col) throw ParseError("missing column '" + name + "' in " + path, 0, name);
  return *col;
}

int cmd_evaluate(const EvaluateArgs& a, const std::string& resolved) {
  if (!(a.trim_quantile > 0.0 && a.trim_quantile <= 1.0)) throw ConfigError("trim-quantile must be in (0, 1]");
  if (!a.kde_window_pct.empty() && (a.kde_window_pct.size() != 2 || !(a.kde_window_pct[1] > a.kde_window_pct[0]))) {
    throw ConfigError("kde-window needs lo < hi");
  }
  Manifest man("evaluate", resolved);
  const auto p = required_column(a.predictions, a.pred_column);
  const auto t = required_column(a.truth, a.truth_column);
  if (p.size() != t.size()) {
    throw ConfigError("prediction and truth row counts differ (" + std::to_string(p.size()) + " vs " +
                      std::to_string(t.size()) + ")");
  }
  std::vector<double> pred, truth;
  std::size_t missing = 0;
  for (std::size_t k = 0; k < p.size(); ++k) {
    if (!p[k] || !t[k]) {
      ++missing;
      continue;
    }
    pred.push_back(*p[k] * 1000.0);
    truth.push_back(*t[k] * 1000.0);
  }
  const auto report = compute_report(pred, truth, a.trim_quantile);
  const auto re = relative_errors(pred, truth);
  const fs::path out = a.out;
  man.write_output(out / "report.csv", format_report_csv(report));
  man.write_output(out / "report.txt", format_report_table({{a.label, report}}));
  man.write_output(out / "parity.csv", format_parity_csv(parity_series(pred, truth)));
  if (re.errors.size() >= 2) {
    KdeOptions ko;
    if (!a.kde_window_pct.empty()) ko.window = std::pair{a.kde_window_pct[0], a.kde_window_pct[1]};
    try {
      man.write_output(out / "kde.csv", format_kde_csv(kde(re.errors, ko)));
    } catch (const ValidationError& e) {
      std::cerr << "warning: no KDE: " << e.what() << '\n';
    }
  }
  man.set("rows_missing", static_cast<double>(missing));
  man.set("rrmse_pct", report.rrmse);
  man.set("n_trimmed", static_cast<double>(report.n_trimmed));
  man.save(out / "manifest.json");
  std::cout << format_report_table({{a.label, report}});
  return kOk;
}

// --------------------------------------------------------------- hullcheck

struct HullArgs {
  std::string train, query;
  std::string out = "out/hullcheck";
  bool strict = false;
};

int cmd_hullcheck(const HullArgs& a, const std::string& resolved) {
  Manifest man("hullcheck", resolved);
  IngestOptions opts;
  opts.strict = a.strict;
  const auto train = ingest(a.train, opts).records;
  const auto query = ingest(a.query, opts).records;
  if (train.size() < 2) throw ConfigError("training set needs at least 2 rows");
  const auto xt = feature_matrix(train), xq = feature_matrix(query);
  // Standardize with the training scaler; verdicts do not depend on it,
  // but the projection is easier to read.
  const auto sc = fit_scaler(xt).scaler;
  auto standardize_all = [&](const Matrix& x) {
    Matrix z;
    for (std::size_t r = 0; r < x.rows(); ++r) {
      std::vector<double> v(x.cols());
      sc.transform(x.row(r), v);
      z.append_row(v);
    }
    return z;
  };
  const auto zt = standardize_all(xt), zq = standardize_all(xq);
  const auto s = classify_batch(zt, zq);
  const auto pca = fit_pca(zt, 2);
  const fs::path out = a.out;
  man.write_output(out / "verdicts.csv", format_verdicts(s));
  man.write_output(out / "projection.csv", format_projection(pca, zt, zq, s));
  std::string sum = "queries " + std::to_string(query.size()) + "\ninside " + std::to_string(s.inside) +
                    "\noutside " + std::to_string(s.outside) + "\n";
  double total = 0.0;
  for (double v : pca.explained_variance) total += v;
  const auto all = fit_pca(zt);
  total = 0.0;
  for (double v : all.explained_variance) total += v;
  sum += "pc1_variance_fraction " + fmt(pca.explained_variance[0] / total) + "\npc2_variance_fraction " +
         fmt(pca.explained_variance[1] / total) + "\n";
  man.write_output(out / "summary.txt", sum);
  man.set("inside", static_cast<double>(s.inside));
  man.set("outside", static_cast<double>(s.outside));
  man.save(out / "manifest.json");
  std::cout << s.outside << " of " << query.size() << " query points lie outside the training hull\n";
  return kOk;
}

// ------------------------------------------------------------ verify-model

struct VerifyArgs {
  std::string model;
  std::string out = "out/verify-model";
};

int cmd_verify(const VerifyArgs& a, const std::string& resolved) {
  Manifest man("verify-model", resolved);
  const auto m = load_model(a.model);
  const auto again = deserialize_model(serialize_model(m));
  if (!(again == m)) throw std::runtime_error("model does not survive a serialization round trip");
  std::string widths;
  for (const auto& l : m.layers) widths += (widths.empty() ? "" : " ") + std::to_string(l.out_dim);
  std::string text = "format CHFKIT-MLP version " + std::to_string(kModelFormatVersion) + "\nmode " +
                     std::string(to_string(m.mode)) + "\nbase_model " + std::string(to_string(m.base_model)) +
                     "\ninputs " + std::to_string(m.input_dim()) + "\nlayer_widths " + widths +
                     "\nhidden_activation " + std::string(to_string(m.layers.front().activation)) + "\nparameters " +
                     std::to_string(m.parameter_count()) + "\nsha256 " + sha256_file(a.model) + "\n";
  man.write_output(fs::path(a.out) / "model_summary.txt", text);
  man.save(fs::path(a.out) / "manifest.json");
  std::cout << text;
  return kOk;
}

// ------------------------------------------------------------------ wiring

void add_common(CLI::App* sub, std::uint64_t* seed) {
  // Options may repeat: config-file values are injected ahead of the command
  // line and the last occurrence wins.
  sub->option_defaults()->multi_option_policy(CLI::MultiOptionPolicy::TakeLast);
  sub->add_option("--config", "key=value file; command-line flags override it");
  if (seed) sub->add_option("--seed", *seed, "Random seed")->capture_default_str();
}

void add_predictor(CLI::App* sub, PredictorArgs& p) {
  sub->add_option("--kind", p.kind, "base_biasi|base_bowring|pure_ml|hybrid_biasi|hybrid_bowring")
      ->capture_default_str();
  sub->add_option("--model", p.model, "CHFKIT-MLP model file (ML kinds)");
  sub->add_option("--solve-mode", p.solve_mode, "hbm|dsm for the base correlation")->capture_default_str();
}

void add_model_args(CLI::App* sub, ModelArgs& m) {
  sub->add_option("--mode", m.mode, "direct|residual")->capture_default_str();
  sub->add_option("--base", m.base, "none|biasi|bowring")->capture_default_str();
}

// Echo of every option after parsing, in the config-file syntax.
std::string resolved_config(const CLI::App& sub) {
  std::string out;
  for (const CLI::Option* opt : sub.get_options()) {
    const std::string name = opt->get_single_name();
    if (name.empty() || name == "help" || name == "help-all" || name == "config") continue;
    std::string value;
    if (opt->get_expected_min() == 0) {
      value = opt->count() ? (opt->as<bool>() ? "true" : "false") : opt->get_default_str();
    } else if (opt->count()) {
      for (const auto& r : opt->reduced_results()) value += (value.empty() ? "" : " ") + r;
    } else {
      value = opt->get_default_str();
    }
    out += name + '=' + value + '\n';
  }
  return out;
}

std::string trim(std::string s) {
  const auto b = s.find_first_not_of(" \t\r");
  if (b == std::string::npos) return {};
  const auto e = s.find_last_not_of(" \t\r");
  s = s.substr(b, e - b + 1);
  if (s.size() >= 2 && (s.front() == '"' || s.front() == '\'') && s.back() == s.front()) s = s.substr(1, s.size() - 2);
  return s;
}

// Reads key=value lines. '#' and ';' start comments; a [section] header
// limits the following keys to the subcommand of that name.
std::vector<std::string> config_args(const std::string& path, const std::string& command) {
  std::string text;
  try {
    text = csv::read_file(path);
  } catch (const std::exception& e) {
    throw ConfigError(std::string("cannot read config: ") + e.what());
  }
  std::vector<std::string> args;
  std::string section;
  std::size_t line_no = 0, pos = 0;
  while (pos <= text.size()) {
    auto nl = text.find('\n', pos);
    if (nl == std::string::npos) nl = text.size();
    std::string line = text.substr(pos, nl - pos);
    pos = nl + 1;
    ++line_no;
    const auto hash = line.find_first_of("#;");
    if (hash != std::string::npos) line.resize(hash);
    line = trim(line);
    if (line.empty()) continue;
    if (line.front() == '[') {
      if (line.back() != ']') throw ConfigError(path + ":" + std::to_string(line_no) + ": bad section header");
      section = trim(line.substr(1, line.size() - 2));
      continue;
    }
    const auto eq = line.find('=');
    if (eq == std::string::npos) throw ConfigError(path + ":" + std::to_string(line_no) + ": expected key=value");
    const auto key = trim(line.substr(0, eq));
    const auto value = trim(line.substr(eq + 1));
    if (key.empty()) throw ConfigError(path + ":" + std::to_string(line_no) + ": empty key");
    if (!section.empty() && section != command) continue;
    if (value.empty()) continue;
    args.push_back("--" + key);
    // Whitespace-separated values feed multi-value options.
    std::size_t p = 0;
    while (p < value.size()) {
      const auto b = value.find_first_not_of(' ', p);
      if (b == std::string::npos) break;
      const auto e = value.find(' ', b);
      args.push_back(value.substr(b, e == std::string::npos ? std::string::npos : e - b));
      p = e == std::string::npos ? value.size() : e;
    }
  }
  return args;
}

// Finds the subcommand token and any --config path, then splices the file's
// options in directly after the subcommand so later flags take precedence.
std::vector<std::string> expand_config(int argc, char** argv, const CLI::App& app) {
  std::vector<std::string> args(argv + 1, argv + argc);
  std::size_t sub = args.size();
  std::string config;
  for (std::size_t k = 0; k < args.size(); ++k) {
    if (sub == args.size() && app.get_subcommand_no_throw(args[k]) != nullptr) sub = k;
    if (args[k] == "--config" && k + 1 < args.size()) config = args[k + 1];
    if (args[k].rfind("--config=", 0) == 0) config = args[k].substr(9);
  }
  if (config.empty() || sub == args.size()) return args;
  auto extra = config_args(config, args[sub]);
  args.insert(args.begin() + static_cast<std::ptrdiff_t>(sub) + 1, extra.begin(), extra.end());
  return args;
}

} // namespace

int run(int argc, char** argv) {
  CLI::App app{"chfkit: critical heat flux correlations, hybrid ML models and channel checks"};
  app.require_subcommand(1);
  app.set_help_all_flag("--help-all", "Show help for all subcommands");

  PrepareArgs prep;
  auto* sp = app.add_subcommand("prepare", "Ingest a CHF table, add base-model residuals, split 80/10/10");
  add_common(sp, &prep.seed);
  sp->add_option("--input", prep.input, "CHF CSV file")->required();
  sp->add_option("--out", prep.out, "Output directory")->capture_default_str();
  sp->add_option("--base", prep.base, "none|biasi|bowring residual base")->capture_default_str();
  sp->add_flag("--strict,!--no-strict", prep.strict, "Reject rows outside the envelope (default) or flag them")
      ->capture_default_str();
  sp->add_option("--env-D-mm", prep.env_d_mm, "Envelope lo hi")->expected(2);
  sp->add_option("--env-L-m", prep.env_l_m, "Envelope lo hi")->expected(2);
  sp->add_option("--env-P-kPa", prep.env_p_kpa, "Envelope lo hi")->expected(2);
  sp->add_option("--env-G-kg-m2s", prep.env_g, "Envelope lo hi")->expected(2);
  sp->add_option("--env-x-e", prep.env_xe, "Envelope lo hi")->expected(2);
  sp->add_option("--env-dh-sub-kJ-kg", prep.env_dh_kj_kg, "Envelope lo hi")->expected(2);
  sp->add_option("--env-chf-kW-m2", prep.env_chf_kw_m2, "Envelope lo hi")->expected(2);

  TrainArgs tr;
  auto* st = app.add_subcommand("train", "Train a pure or residual network");
  add_common(st, &tr.cfg.seed);
  st->add_option("--train", tr.train, "Prepared training CSV")->required();
  st->add_option("--validation", tr.validation, "Prepared validation CSV (monitoring only)");
  st->add_option("--out", tr.out, "Output directory")->capture_default_str();
  add_model_args(st, tr.model);
  st->add_option("--hidden", tr.hidden, "Hidden layer widths, comma separated")->capture_default_str();
  st->add_option("--activation", tr.activation, "elu|relu|softplus|sigmoid|tanh")->capture_default_str();
  st->add_option("--epochs", tr.cfg.epochs, "Epochs")->capture_default_str();
  st->add_option("--batch-size", tr.cfg.batch_size, "Mini-batch size")->capture_default_str();
  st->add_option("--lr0", tr.cfg.lr0, "Initial learning rate")->capture_default_str();
  st->add_option("--decay-rate", tr.cfg.decay_rate, "Per-epoch learning-rate factor")->capture_default_str();

  TuneArgs tu;
  auto* su = app.add_subcommand("tune", "Random search with successive halving");
  add_common(su, &tu.opts.seed);
  su->add_option("--train", tu.train, "Prepared training CSV")->required();
  su->add_option("--out", tu.out, "Output directory")->capture_default_str();
  add_model_args(su, tu.model);
  su->add_option("--trials", tu.trials, "Sampled configurations")->capture_default_str();
  su->add_option("--min-epochs", tu.opts.min_epochs, "First rung")->capture_default_str();
  su->add_option("--max-epochs", tu.opts.max_epochs, "Last rung")->capture_default_str();
  su->add_option("--reduction", tu.opts.reduction, "Keep 1/reduction per rung")->capture_default_str();
  su->add_option("--budget", tu.opts.budget, "Total epoch budget, 0 = unlimited")->capture_default_str();
  su->add_option("--validation-fraction", tu.opts.validation_fraction, "Internal validation share")
      ->capture_default_str();
  su->add_option("--decay-rate", tu.opts.decay_rate, "Per-epoch learning-rate factor")->capture_default_str();
  su->add_option("--final-epochs", tu.final_epochs, "Epochs written to best.ini")->capture_default_str();

  PredictArgs pr;
  auto* sr = app.add_subcommand("predict", "Predict CHF for rows of D, L, P, G, inlet subcooling");
  add_common(sr, nullptr);
  add_predictor(sr, pr.pred);
  sr->add_option("--input", pr.input, "Feature CSV")->required();
  sr->add_option("--out", pr.out, "Output directory")->capture_default_str();

  SimulateArgs si;
  auto* ss = app.add_subcommand("simulate", "Uniformly heated tube: axial profile and DNBR per case");
  add_common(ss, nullptr);
  add_predictor(ss, si.pred);
  ss->add_option("--cases", si.cases, "Channel case CSV")->required();
  ss->add_option("--out", si.out, "Output directory")->capture_default_str();
  ss->add_flag("--critical-power", si.critical_power, "Search the wall flux where min DNBR = 1");
  ss->add_option("--q-lo-kW-m2", si.q_lo_kw_m2, "Critical power bracket low end")->capture_default_str();
  ss->add_option("--q-hi-kW-m2", si.q_hi_kw_m2, "Critical power bracket high end")->capture_default_str();

  EvaluateArgs ev;
  auto* se = app.add_subcommand("evaluate", "Error metrics, parity series and KDE");
  add_common(se, nullptr);
  se->add_option("--predictions", ev.predictions, "CSV with predictions")->required();
  se->add_option("--truth", ev.truth, "CSV with measured CHF")->required();
  se->add_option("--pred-column", ev.pred_column, "Prediction column (kW/m2)")->capture_default_str();
  se->add_option("--truth-column", ev.truth_column, "Truth column (kW/m2)")->capture_default_str();
  se->add_option("--label", ev.label, "Model name in the report")->capture_default_str();
  se->add_option("--trim-quantile", ev.trim_quantile, "Keep this |error| quantile for mean/std/rRMSE")
      ->capture_default_str();
  se->add_option("--kde-window", ev.kde_window_pct, "KDE grid lo hi in %")->expected(2);
  se->add_option("--out", ev.out, "Output directory")->capture_default_str();

  HullArgs hu;
  auto* sh = app.add_subcommand("hullcheck", "Convex hull membership of query rows in the training set");
  add_common(sh, nullptr);
  sh->add_option("--train", hu.train, "Training CHF CSV")->required();
  sh->add_option("--query", hu.query, "Query CHF CSV")->required();
  sh->add_option("--out", hu.out, "Output directory")->capture_default_str();
  sh->add_flag("--strict,!--no-strict", hu.strict, "Drop rows outside the envelope")->capture_default_str();

  VerifyArgs ve;
  auto* sv = app.add_subcommand("verify-model", "Validate a model file and print its layout");
  add_common(sv, nullptr);
  sv->add_option("model", ve.model, "Model file")->required();
  sv->add_option("--out", ve.out, "Output directory")->capture_default_str();

  try {
    auto args = expand_config(argc, argv, app);
    std::reverse(args.begin(), args.end());
    app.parse(args);
  } catch (const ConfigError& e) {
    std::cerr << "configuration error: " << e.what() << '\n';
    return kConfigError;
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? kOk : kConfigError;
  }

  try {
    if (*sp) return cmd_prepare(prep, resolved_config(*sp));
    if (*st) return cmd_train(tr, resolved_config(*st));
    if (*su) return cmd_tune(tu, resolved_config(*su));
    if (*sr) return cmd_predict(pr, resolved_config(*sr));
    if (*ss) return cmd_simulate(si, resolved_config(*ss));
    if (*se) return cmd_evaluate(ev, resolved_config(*se));
    if (*sh) return cmd_hullcheck(hu, resolved_config(*sh));
    if (*sv) return cmd_verify(ve, resolved_config(*sv));
  } catch (const ConfigError& e) {
    std::cerr << "configuration error: " << e.what() << '\n';
    return kConfigError;
  } catch (const ValidationError& e) {
    std::cerr << "configuration error: " << e.what() << '\n';
    return kConfigError;
  } catch (const TrainingDiverged& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kTrainingDiverged;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kIoError;
  }
  return kConfigError;
}

} // namespace chfkit::cli
