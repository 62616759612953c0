// train / evaluate / predict / inspect front-end for the autoids engine

#include <cstdio>
#include <fstream>
#include <iostream>
#include <string>

#include <CLI11.hpp>

#include "autoids/model_io.hpp"
#include "autoids/pipeline.hpp"

namespace {

// exit codes: 0 ok, 2 config, 3 data, 4 training, 5 persistence
int exit_code_for(const std::exception& e) {
  if (dynamic_cast<const autoids::ConfigError*>(&e)) return 2;
  if (dynamic_cast<const autoids::DataError*>(&e)) return 3;
  if (dynamic_cast<const autoids::PersistError*>(&e)) return 5;
  if (dynamic_cast<const autoids::TrainError*>(&e)) return 4;
  return 1;
}

std::string csv_escape(const std::string& s) {
  if (s.find_first_of(",\"\n") == std::string::npos) return s;
  std::string quoted = "\"";
  for (const char c : s) {
    if (c == '"') quoted += '"';
    quoted += c;
  }
  quoted += '"';
  return quoted;
}

void write_json(const autoids::Json& j, const std::string& path) {
  std::ofstream out(path, std::ios::trunc);
  if (!out) throw autoids::PersistError("cannot open '" + path + "' for writing");
  out << j.dump(2) << '\n';
  if (!out) throw autoids::PersistError("write failed for '" + path + "'");
}

int cmd_train(const std::string& config_path, const std::string& data_path,
              const std::string& model_out, const std::string& report_out) {
  autoids::PipelineConfig cfg = autoids::load_config(config_path);
  if (!data_path.empty()) cfg.data_path = data_path;
  if (cfg.data_path.empty())
    throw autoids::ConfigError("no data file: pass --data or set \"data\" in the config");

  try {
    autoids::RunResult result = autoids::run_train(cfg);
    autoids::save_model(result.ensemble, autoids::config_to_json(cfg).dump(), model_out);
    write_json(result.report, report_out);
  } catch (...) {
    std::remove(model_out.c_str());
    std::remove(report_out.c_str());
    throw;
  }
  std::cout << "model written to " << model_out << "\nreport written to " << report_out << "\n";
  return 0;
}

int cmd_evaluate(const std::string& model_path, const std::string& data_path,
                 const std::string& report_out) {
  const autoids::LoadedModel loaded = autoids::load_model(model_path);
  const autoids::RawTable table = autoids::parse_csv(data_path);

  std::string label_column = "Label";
  const autoids::Json snapshot = autoids::Json::parse(loaded.config_snapshot, nullptr, false);
  if (snapshot.is_object() && snapshot.contains("label_column"))
    label_column = snapshot["label_column"].get<std::string>();

  const autoids::Json report = autoids::evaluate_model(loaded.ensemble, table, label_column);
  write_json(report, report_out);
  std::cout << "weighted F1: " << report["metrics"]["weighted_f1"].get<double>() << "\n"
            << "report written to " << report_out << "\n";
  return 0;
}

int cmd_predict(const std::string& model_path, const std::string& input_path,
                const std::string& output_path) {
  const autoids::LoadedModel loaded = autoids::load_model(model_path);
  const autoids::StackedEnsemble& e = loaded.ensemble;
  const autoids::RawTable table = autoids::parse_csv(input_path);
  const autoids::AlignedData aligned = autoids::align_for_model(e, table, "");

  const auto [labels, proba] = autoids::predict_ensemble(e, aligned.features);

  std::ofstream out(output_path, std::ios::trunc);
  if (!out) throw autoids::PersistError("cannot open '" + output_path + "' for writing");
  out << "predicted_label";
  for (const auto& name : e.class_names) out << ",conf_" << csv_escape(name);
  out << '\n';
  for (std::size_t i = 0; i < proba.rows(); ++i) {
    out << csv_escape(e.class_names[static_cast<std::size_t>(labels[i])]);
    for (std::size_t c = 0; c < proba.cols(); ++c) {
      char buf[32];
      std::snprintf(buf, sizeof buf, "%.17g", proba(i, c));
      out << ',' << buf;
    }
    out << '\n';
  }
  if (!out) throw autoids::PersistError("write failed for '" + output_path + "'");
  std::cout << proba.rows() << " predictions written to " << output_path << "\n";
  return 0;
}

int cmd_inspect(const std::string& model_path) {
  const autoids::LoadedModel loaded = autoids::load_model(model_path);
  const autoids::StackedEnsemble& e = loaded.ensemble;

  std::cout << "classes (" << e.class_names.size() << "):";
  for (const auto& name : e.class_names) std::cout << ' ' << name;
  std::cout << "\nmeta-feature mode: " << autoids::meta_feature_mode_name(e.mode) << "\n";

  for (std::size_t m = 0; m < e.base_models.size(); ++m) {
    std::cout << "base[" << m << "] " << autoids::family_name(e.base_families[m]) << ":";
    for (const auto& [name, value] : e.base_specs[m].params) {
      std::cout << ' ' << name << '=';
      if (const auto* i = std::get_if<std::int64_t>(&value))
        std::cout << *i;
      else if (const auto* d = std::get_if<double>(&value))
        std::cout << *d;
      else
        std::cout << std::get<std::string>(value);
    }
    std::cout << "\n";
  }
  std::cout << "meta " << autoids::family_name(e.meta_family) << ":";
  for (const auto& [name, value] : e.meta_spec.params) {
    std::cout << ' ' << name << '=';
    if (const auto* i = std::get_if<std::int64_t>(&value))
      std::cout << *i;
    else if (const auto* d = std::get_if<double>(&value))
      std::cout << *d;
    else
      std::cout << std::get<std::string>(value);
  }
  std::cout << "\nselected features (" << e.selection.selected.size() << " of "
            << e.original_feature_count << ", cumulative importance " << e.selection.cumulative
            << "):";
  for (const std::size_t f : e.selection.selected) std::cout << ' ' << e.feature_names[f];
  std::cout << "\n";
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"autoids: automated intrusion-detection model training"};
  app.require_subcommand(1);

  std::string config_path, data_path, model_path, report_path, input_path, output_path;

  auto* train = app.add_subcommand("train", "train an ensemble from a labeled CSV");
  train->add_option("--config", config_path, "pipeline config (JSON)")->required();
  train->add_option("--data", data_path, "labeled flow-record CSV (overrides config)");
  train->add_option("--model-out", model_path, "output model file")->required();
  train->add_option("--report-out", report_path, "output report (JSON)")->required();

  auto* evaluate = app.add_subcommand("evaluate", "score a labeled CSV with a trained model");
  evaluate->add_option("--model", model_path, "model file")->required();
  evaluate->add_option("--data", data_path, "labeled CSV")->required();
  evaluate->add_option("--report-out", report_path, "output report (JSON)")->required();

  auto* predict = app.add_subcommand("predict", "label an unlabeled CSV");
  predict->add_option("--model", model_path, "model file")->required();
  predict->add_option("--input", input_path, "input CSV")->required();
  predict->add_option("--output", output_path, "output CSV")->required();

  auto* inspect = app.add_subcommand("inspect", "print model family, tuning and features");
  inspect->add_option("--model", model_path, "model file")->required();

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : 2;
  }

  try {
    if (train->parsed()) return cmd_train(config_path, data_path, model_path, report_path);
    if (evaluate->parsed()) return cmd_evaluate(model_path, data_path, report_path);
    if (predict->parsed()) return cmd_predict(model_path, input_path, output_path);
    if (inspect->parsed()) return cmd_inspect(model_path);
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return exit_code_for(e);
  }
  return 0;
}
