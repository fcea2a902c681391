#include "carm/cli.hpp"

#include <algorithm>
#include <cstdio>
#include <cstdlib>
#include <fstream>
#include <map>
#include <ostream>
#include <sstream>

#include "carm/service.hpp"

namespace carm {

using nlohmann::json;

namespace {

json read_json_file(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError(std::vector<FieldError>{{"config", "cannot open " + path.string()}});
  try {
    return json::parse(in);
  } catch (const json::parse_error& e) {
    throw ConfigError(std::vector<FieldError>{{"config", path.string() + ": " + e.what()}});
  }
}

void write_file(const std::filesystem::path& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary);
  out << text;
  if (!out) throw std::runtime_error("cannot write " + path.string());
}

void print_errors(std::ostream& err, const ConfigError& e) {
  err << "configuration error\n";
  for (const auto& fe : e.errors()) err << "  " << fe.field << ": " << fe.message << "\n";
}

std::string format_double(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.6g", v);
  return buf;
}

std::string metrics_text(const std::vector<Objective>& objectives, const MetricVector& metrics) {
  std::string out = "[";
  for (std::size_t i = 0; i < objectives.size() && i < metrics.size(); ++i) {
    if (i) out += ", ";
    out += to_string(objectives[i]) + "=" + format_double(natural_value(objectives[i], metrics[i]));
  }
  return out + "]";
}

}  // namespace

std::string render_rule(const Chromosome& rule, const Dataset& dataset) {
  std::string out = "IF ";
  for (std::size_t j = 0; j < rule.genes.size(); ++j) {
    if (j) out += " AND ";
    out += dataset.attributes.at(j).name + "=" + dataset.attributes[j].label(rule.genes[j]);
  }
  out += " THEN " + dataset.class_attribute.name + "=" + dataset.class_attribute.label(rule.class_code);
  return out;
}

json describe_dataset(const Dataset& dataset) {
  auto column = [](const AttributeMeta& meta) {
    json values = json::array();
    for (const auto code : meta.values) values.push_back({{"code", code}, {"label", meta.label(code)}});
    return json{{"name", meta.name}, {"kind", std::string(to_string(meta.kind))}, {"values", std::move(values)}};
  };
  json attributes = json::array();
  for (const auto& a : dataset.attributes) attributes.push_back(column(a));
  std::map<Code, std::size_t> counts;
  for (const auto& row : dataset.instances) ++counts[row.back()];
  json classes = json::array();
  for (const auto& [code, n] : counts) {
    classes.push_back({{"code", code}, {"label", dataset.class_attribute.label(code)}, {"count", n}});
  }
  return {{"name", dataset.name},
          {"instances", dataset.instances.size()},
          {"attributes", std::move(attributes)},
          {"class_attribute", column(dataset.class_attribute)},
          {"class_counts", std::move(classes)}};
}

std::pair<std::string, json> parse_assignment(const std::string& text) {
  const auto eq = text.find('=');
  if (eq == std::string::npos || eq == 0) {
    throw ConfigError(std::vector<FieldError>{{text, "expected KEY=VALUE"}});
  }
  const auto key = text.substr(0, eq);
  const auto raw = text.substr(eq + 1);
  json value = json::parse(raw, nullptr, false);
  if (value.is_discarded()) value = raw;
  return {key, value};
}

RunConfig apply_overrides(RunConfig config, const std::vector<std::string>& assignments) {
  for (const auto& a : assignments) {
    auto [key, value] = parse_assignment(a);
    config = run_config_from_json(json{{key, value}}, config);
  }
  return config;
}

std::filesystem::path default_output_dir() {
  if (const char* env = std::getenv("CARM_OUT"); env && *env) return env;
  return "carm-out";
}

RunConfig resolve_run_config(const RunOptions& options) {
  json file = json::object();
  if (options.config) file = read_json_file(*options.config);
  if (!file.is_object()) throw ConfigError(std::vector<FieldError>{{"config", "expected a JSON object"}});

  std::string dataset = "iris";
  if (options.preset) {
    dataset = *options.preset;
  } else if (auto it = file.find("dataset"); it != file.end() && it->is_string()) {
    dataset = it->get<std::string>();
  }
  RunConfig base;
  if (options.preset || is_preset(dataset)) {
    base = preset_config(dataset);
  } else {
    base.dataset = dataset;
  }
  if (options.preset) file.erase("dataset");
  auto config = run_config_from_json(file, base);
  if (options.objectives) config = run_config_from_json(json{{"objectives", *options.objectives}}, config);
  if (options.seed) config.rng_seed = *options.seed;
  return apply_overrides(config, options.sets);
}

std::string rules_listing(const RunResult& result, const Dataset& dataset) {
  std::string out;
  out += "# rule set (" + std::string(to_string(result.config.ruleset)) + "), " +
         std::to_string(result.ruleset.size()) + " rules\n";
  for (const auto& m : result.ruleset) {
    out += "#" + std::to_string(m.id.value) + " " + render_rule(m.rule, dataset) + " " +
           metrics_text(result.config.objectives, m.metrics) + "\n";
  }
  out += "\n# final front, " + std::to_string(result.final_front.size()) + " rules\n";
  for (const auto& m : result.final_front) {
    out += "#" + std::to_string(m.id.value) + " " + render_rule(m.rule, dataset) + " " +
           metrics_text(result.config.objectives, m.metrics) + "\n";
  }
  return out;
}

std::string front_csv(const RunResult& result) {
  std::string out = "rule_id";
  for (const auto& o : result.config.objectives) out += "," + to_string(o);
  out += "\n";
  char buf[40];
  for (const auto& m : result.final_front) {
    out += std::to_string(m.id.value);
    for (std::size_t i = 0; i < result.config.objectives.size() && i < m.metrics.size(); ++i) {
      std::snprintf(buf, sizeof buf, ",%.17g", natural_value(result.config.objectives[i], m.metrics[i]));
      out += buf;
    }
    out += "\n";
  }
  return out;
}

std::string run_report(const RunResult& r) {
  std::ostringstream out;
  out << "dataset            " << r.dataset << "\n"
      << "objectives         ";
  for (std::size_t i = 0; i < r.config.objectives.size(); ++i) {
    out << (i ? "," : "") << to_string(r.config.objectives[i]);
  }
  out << "\n"
      << "seed               " << r.config.rng_seed << "\n"
      << "generations        " << r.generations_completed << "/" << r.config.generations
      << (r.stopped ? " (stopped)" : "") << "\n"
      << "train/test         " << r.train_size << "/" << r.test_size << " ("
      << (r.config.holdout ? "holdout" : "resubstitution") << ")\n"
      << "rules (RKS)        " << r.rks_count << "\n"
      << "dominators (HKS)   " << r.hks_count << "\n"
      << "history rules      " << r.history_rules << "\n"
      << "rule set           " << r.ruleset.size() << " (" << to_string(r.config.ruleset) << ")\n"
      << "accuracy           " << format_double(r.accuracy) << "\n"
      << "train accuracy     " << format_double(r.train_accuracy) << "\n"
      << "wall time ms       " << format_double(r.wall_time_ms) << "\n";
  return out.str();
}

int cmd_run(const RunOptions& options, std::ostream& out, std::ostream& err) {
  RunConfig config;
  Dataset dataset;
  try {
    config = resolve_run_config(options);
    if (auto errors = validate(config); !errors.empty()) throw ConfigError(std::move(errors));
    dataset = load_dataset(config);
    if (auto errors = validate(config, dataset); !errors.empty()) throw ConfigError(std::move(errors));
  } catch (const ConfigError& e) {
    print_errors(err, e);
    return exit_config_error;
  } catch (const std::exception& e) {
    err << "error: " << e.what() << "\n";
    return exit_runtime_error;
  }
  try {
    const auto result = run(config, dataset);
    std::filesystem::create_directories(options.out);
    write_file(options.out / "run.json", to_json(result).dump(2) + "\n");
    write_file(options.out / "rules.txt", rules_listing(result, dataset));
    write_file(options.out / "front.csv", front_csv(result));
    const auto report = run_report(result);
    write_file(options.out / "report.txt", report);
    out << report;
    return exit_ok;
  } catch (const std::exception& e) {
    err << "error: " << e.what() << "\n";
    return exit_runtime_error;
  }
}

ExperimentPlan resolve_plan(const ExperimentOptions& options) {
  auto doc = read_json_file(options.plan);
  if (!doc.is_object()) throw ConfigError(std::vector<FieldError>{{"plan", "expected a JSON object"}});
  static const char* plan_keys[] = {"datasets",          "objective_sets",      "repetitions", "base_seed",
                                    "dataset_overrides", "six_objective_probe", "threads"};
  if (!doc.contains("overrides")) doc["overrides"] = json::object();
  for (const auto& a : options.sets) {
    auto [key, value] = parse_assignment(a);
    const bool plan_key = std::find(std::begin(plan_keys), std::end(plan_keys), key) != std::end(plan_keys);
    if (plan_key) {
      doc[key] = value;
    } else {
      doc["overrides"][key] = value;
    }
  }
  if (options.seed) doc["base_seed"] = *options.seed;
  return plan_from_json(doc);
}

int cmd_experiment(const ExperimentOptions& options, std::ostream& out, std::ostream& err) {
  ExperimentPlan plan;
  try {
    plan = resolve_plan(options);
  } catch (const ConfigError& e) {
    print_errors(err, e);
    return exit_config_error;
  } catch (const std::exception& e) {
    err << "error: " << e.what() << "\n";
    return exit_runtime_error;
  }

  auto save = [&](const ExperimentReport& report) {
    std::filesystem::create_directories(options.out);
    write_file(options.out / "experiment.json", to_json(report).dump(2) + "\n");
    write_file(options.out / "report.txt", render_table(report));
    write_file(options.out / "front.csv", front_csv(report));
  };
  try {
    const auto report = run_plan(plan, [&](const RepetitionRow& row, std::size_t done, std::size_t total) {
      err << "[" << done << "/" << total << "] " << row.dataset << " " << row.objectives.size()
          << " objectives, repetition " << row.repetition << "\n";
    });
    save(report);
    out << render_table(report);
    return exit_ok;
  } catch (const ExperimentError& e) {
    err << "error: " << e.what() << "\n";
    try {
      save(e.partial());
    } catch (const std::exception& inner) {
      err << "error: " << inner.what() << "\n";
    }
    return exit_runtime_error;
  } catch (const ConfigError& e) {
    print_errors(err, e);
    return exit_config_error;
  } catch (const std::exception& e) {
    err << "error: " << e.what() << "\n";
    return exit_runtime_error;
  }
}

int cmd_inspect(const InspectOptions& options, std::ostream& out, std::ostream& err) {
  Dataset dataset;
  try {
    RunConfig config;
    config.dataset = options.dataset;
    if (options.schema_preset) config.schema_preset = *options.schema_preset;
    if (!is_preset(config.dataset) && !std::filesystem::exists(config.dataset)) {
      throw ConfigError(std::vector<FieldError>{{"dataset", "unknown preset or missing file: '" + config.dataset + "'"}});
    }
    dataset = load_dataset(config);
  } catch (const ConfigError& e) {
    print_errors(err, e);
    return exit_config_error;
  } catch (const std::exception& e) {
    err << "error: " << e.what() << "\n";
    return exit_runtime_error;
  }
  const auto doc = describe_dataset(dataset);
  if (options.json) {
    out << doc.dump(2) << "\n";
    return exit_ok;
  }
  out << dataset.name << ": " << dataset.instances.size() << " instances, " << dataset.attribute_count()
      << " attributes\n";
  auto print_column = [&](const json& col) {
    out << "  " << col["name"].get<std::string>() << " (" << col["kind"].get<std::string>() << "):";
    for (const auto& v : col["values"]) out << " " << v["code"].get<Code>() << "=" << v["label"].get<std::string>();
    out << "\n";
  };
  for (const auto& col : doc["attributes"]) print_column(col);
  print_column(doc["class_attribute"]);
  out << "class counts:";
  for (const auto& c : doc["class_counts"]) out << " " << c["label"].get<std::string>() << "=" << c["count"].get<std::size_t>();
  out << "\n";
  return exit_ok;
}

int cmd_serve(const ServeOptions& options, std::ostream& out, std::ostream& err) {
  try {
    ServiceOptions so;
    so.out_dir = options.out;
    so.ui_dir = options.ui_dir;
    so.max_concurrent = options.max_concurrent;
    Service service(so);
    out << "listening on http://" << options.host << ":" << options.port << "\n" << std::flush;
    if (!service.listen(options.host, options.port)) {
      err << "error: cannot listen on " << options.host << ":" << options.port << "\n";
      return exit_runtime_error;
    }
    return exit_ok;
  } catch (const std::exception& e) {
    err << "error: " << e.what() << "\n";
    return exit_runtime_error;
  }
}

}  // namespace carm
