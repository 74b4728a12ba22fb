#include "isdg/harness/training.hpp"

#include <algorithm>
#include <cstdio>
#include <exception>
#include <fstream>
#include <numeric>
#include <ostream>
#include <sstream>

#include <json.hpp>

#include "isdg/errors.hpp"
#include "isdg/harness/metrics.hpp"
#include "isdg/nn/checkpoint.hpp"
#include "isdg/nn/optimizer.hpp"

namespace isdg::harness {
namespace {

using nlohmann::json;

const char* const kTrainKeys[] = {"epochs", "batch_size", "lr", "clip_norm", "stop_train_em", "eval_every"};

std::string trim(std::string_view s) {
  const auto b = s.find_first_not_of(" \t\r");
  if (b == std::string_view::npos) return {};
  const auto e = s.find_last_not_of(" \t\r");
  return std::string(s.substr(b, e - b + 1));
}

double to_double(const std::string& key, const std::string& v) {
  char* end = nullptr;
  const double d = std::strtod(v.c_str(), &end);
  if (v.empty() || *end) throw ValidationError("config key " + key + ": not a number: " + v);
  return d;
}

int to_int(const std::string& key, const std::string& v) {
  char* end = nullptr;
  const long d = std::strtol(v.c_str(), &end, 10);
  if (v.empty() || *end) throw ValidationError("config key " + key + ": not an integer: " + v);
  return static_cast<int>(d);
}

// Re-truncates stored paths when the model uses a tighter bound.
ModelInput model_input(const Record& r, const EncoderConfig& config) {
  ModelInput input = r.to_input();
  const int stored = r.paths.max_path_len;
  if (stored == 0 || stored > config.max_path_len) input.paths = truncate_paths(input.paths, config.max_path_len);
  return input;
}

ExamplePrediction score_prediction(const Record& r, int start, int end, std::string text) {
  ExamplePrediction p;
  p.id = r.id;
  p.start = start;
  p.end = end;
  p.text = std::move(text);
  const F1Em s = squad_f1_em(p.text, r.answer_texts());
  p.f1 = s.f1;
  p.em = s.em;
  return p;
}

EvalReport summarize(std::vector<ExamplePrediction> per_example) {
  EvalReport report;
  report.count = static_cast<int>(per_example.size());
  for (const auto& p : per_example) {
    report.f1 += p.f1;
    report.em += p.em;
  }
  if (report.count) {
    report.f1 /= report.count;
    report.em /= report.count;
  }
  report.per_example = std::move(per_example);
  return report;
}

std::uint64_t fnv1a(std::string_view text) {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (unsigned char c : text) {
    h ^= c;
    h *= 0x100000001b3ULL;
  }
  return h;
}

}  // namespace

std::map<std::string, std::string> TrainConfig::to_map() const {
  auto m = encoder.to_map();
  m["epochs"] = std::to_string(epochs);
  m["batch_size"] = std::to_string(batch_size);
  m["lr"] = format_number(lr);
  m["clip_norm"] = format_number(clip_norm);
  m["stop_train_em"] = format_number(stop_train_em);
  m["eval_every"] = std::to_string(eval_every);
  return m;
}

void TrainConfig::apply(const std::map<std::string, std::string>& values) {
  TrainConfig next = *this;
  std::map<std::string, std::string> encoder_values;
  for (const auto& [key, value] : values) {
    if (key == "epochs") {
      next.epochs = to_int(key, value);
    } else if (key == "batch_size") {
      next.batch_size = to_int(key, value);
    } else if (key == "lr") {
      next.lr = to_double(key, value);
    } else if (key == "clip_norm") {
      next.clip_norm = to_double(key, value);
    } else if (key == "stop_train_em") {
      next.stop_train_em = to_double(key, value);
    } else if (key == "eval_every") {
      next.eval_every = to_int(key, value);
    } else {
      encoder_values[key] = value;
    }
  }
  next.encoder.apply(encoder_values);
  if (next.epochs < 1 || next.batch_size < 1 || next.eval_every < 1) throw ValidationError("epochs, batch_size and eval_every must be positive");
  if (!(next.lr > 0)) throw ValidationError("lr must be positive");
  *this = next;
}

std::map<std::string, std::string> parse_config_text(std::string_view text) {
  std::map<std::string, std::string> out;
  std::istringstream in{std::string(text)};
  std::string line;
  int line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (auto hash = line.find('#'); hash != std::string::npos) line.erase(hash);
    const std::string t = trim(line);
    if (t.empty()) continue;
    const auto eq = t.find('=');
    if (eq == std::string::npos) {
      throw ValidationError("config line " + std::to_string(line_no) + ": expected key = value");
    }
    out[trim(std::string_view(t).substr(0, eq))] = trim(std::string_view(t).substr(eq + 1));
  }
  return out;
}

std::string config_text(const std::map<std::string, std::string>& values) {
  std::string out;
  for (const auto& [k, v] : values) out += k + " = " + v + "\n";
  return out;
}

std::string fingerprint(const TrainConfig& config, const std::vector<std::string>& relation_vocab) {
  std::string canonical = config_text(config.to_map());
  for (const auto& name : relation_vocab) canonical += name + "\n";
  char buf[17];
  std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(fnv1a(canonical)));
  return buf;
}

std::string log_line(const LogEntry& e) {
  json j;
  j["step"] = e.step;
  j["loss"] = e.loss;
  j["lr"] = e.lr;
  j["grad_norm"] = e.grad_norm;
  return j.dump();
}

std::string report_json(const EvalReport& report) {
  json j;
  j["f1"] = report.f1;
  j["em"] = report.em;
  j["count"] = report.count;
  j["per_example"] = json::array();
  for (const auto& p : report.per_example) {
    j["per_example"].push_back(
        {{"id", p.id}, {"start", p.start}, {"end", p.end}, {"text", p.text}, {"f1", p.f1}, {"em", p.em}});
  }
  return j.dump(2) + "\n";
}

std::string predictions_jsonl(const EvalReport& report) {
  std::string out;
  for (const auto& p : report.per_example) {
    out += json({{"id", p.id}, {"start", p.start}, {"end", p.end}, {"text", p.text}}).dump() + "\n";
  }
  return out;
}

EvalReport report_from_predictions(std::string_view predictions, const std::vector<Record>& records) {
  std::map<std::string, const Record*> by_id;
  for (const auto& r : records) by_id[r.id] = &r;
  std::vector<ExamplePrediction> per_example;
  std::istringstream in{std::string(predictions)};
  std::string line;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    const json j = json::parse(line);
    auto it = by_id.find(j.at("id"));
    if (it == by_id.end()) throw ValidationError("prediction for unknown example " + j.at("id").get<std::string>());
    per_example.push_back(score_prediction(*it->second, j.at("start"), j.at("end"), j.at("text")));
  }
  return summarize(std::move(per_example));
}

std::vector<std::string> check_vocabulary(const std::vector<Record>& records,
                                          const std::vector<std::string>& expected_vocab) {
  if (records.empty()) throw ValidationError("empty corpus");
  std::vector<std::string> vocab = expected_vocab.empty() ? records.front().relation_vocab : expected_vocab;
  for (const auto& r : records) {
    if (r.relation_vocab != vocab) {
      throw ValidationError("relation vocabulary drift in example " + r.id + ":\n" +
                            vocab_diff(vocab, r.relation_vocab));
    }
  }
  return vocab;
}

TrainResult train(TrainConfig config, const std::vector<Record>& records, std::uint64_t seed,
                  std::ostream* log_out) {
  TrainResult result;
  const auto vocab = check_vocabulary(records, {});
  auto& enc = config.encoder;
  enc.relation_vocab = static_cast<int>(vocab.size());
  if (enc.piece_vocab == 0) {
    int max_id = 0;
    for (const auto& r : records) {
      for (const auto& n : r.nodes) max_id = std::max(max_id, n.piece_id);
    }
    enc.piece_vocab = max_id + 1;
  }
  enc.validate();

  std::vector<ModelInput> inputs;
  std::vector<Gold> golds;
  std::vector<const Record*> used;
  for (const auto& r : records) {
    if (!r.has_gold()) continue;
    if (r.n() > enc.max_len) {
      throw ValidationError("example " + r.id + " has " + std::to_string(r.n()) + " nodes, above max_len " +
                            std::to_string(enc.max_len));
    }
    inputs.push_back(model_input(r, enc));
    golds.push_back({r.gold_start, r.gold_end});
    used.push_back(&r);
  }
  if (inputs.empty()) throw ValidationError("no trainable examples (all answers truncated)");

  auto model = std::make_unique<Model<float>>(enc);
  model->initialize(seed);
  nn::Adam<float> adam({config.lr, 0.9, 0.999, 1e-8, config.clip_norm});
  nn::Rng order_rng(seed ^ 0x5EEDULL);
  nn::Rng dropout_rng(seed + 1);
  std::vector<int> order(inputs.size());
  std::iota(order.begin(), order.end(), 0);

  std::vector<Record> train_view;
  if (config.stop_train_em > 0) {
    for (const auto* r : used) train_view.push_back(*r);
  }

  long step = 0;
  for (int epoch = 1; epoch <= config.epochs; ++epoch) {
    order_rng.shuffle(order);
    double epoch_loss = 0;
    for (std::size_t b = 0; b < order.size(); b += config.batch_size) {
      const std::size_t e = std::min(order.size(), b + config.batch_size);
      const float inv = 1.0f / static_cast<float>(e - b);
      model->state().zero_grad();
      double batch_loss = 0;
      for (std::size_t k = b; k < e; ++k) {
        nn::Tape<float> tape;
        const int idx = order[k];
        auto loss = model->record(tape, inputs[idx], golds[idx], {true, &dropout_rng});
        batch_loss += tape.value(*loss)[0];
        tape.backward(nn::scale(tape, *loss, inv));
      }
      const double norm = adam.step(model->state());
      LogEntry entry{++step, batch_loss / (e - b), config.lr, norm};
      if (log_out) *log_out << log_line(entry) << '\n';
      result.log.push_back(entry);
      epoch_loss += batch_loss;
    }
    result.epochs_run = epoch;
    result.final_loss = epoch_loss / order.size();
    if (config.stop_train_em > 0 && epoch % config.eval_every == 0) {
      result.last_train_em = evaluate(*model, train_view).em;
      if (result.last_train_em >= config.stop_train_em) break;
    }
  }
  if (log_out) log_out->flush();
  result.trained.config = config;
  result.trained.relation_vocab = vocab;
  result.trained.fingerprint = fingerprint(config, vocab);
  result.trained.seed = seed;
  result.trained.model = std::move(model);
  return result;
}

EvalReport evaluate(Model<float>& model, const std::vector<Record>& records) {
  const int count = static_cast<int>(records.size());
  std::vector<ExamplePrediction> per_example(count);
  std::vector<std::exception_ptr> errors(count);
#pragma omp parallel for schedule(dynamic)
  for (int k = 0; k < count; ++k) {
    try {
      const Record& r = records[k];
      if (r.n() > model.config().max_len) {
        throw ValidationError("example " + r.id + " has " + std::to_string(r.n()) + " nodes, above max_len " +
                              std::to_string(model.config().max_len));
      }
      const SpanPrediction span = model.predict(model_input(r, model.config()));
      per_example[k] = score_prediction(r, span.start, span.end, r.span_text(span.start, span.end));
    } catch (...) {
      errors[k] = std::current_exception();
    }
  }
  for (const auto& e : errors) {
    if (e) std::rethrow_exception(e);
  }
  return summarize(std::move(per_example));
}

void save_trained(const std::string& path, const TrainedModel& trained) {
  json meta;
  meta["config"] = trained.config.to_map();
  meta["relation_vocab"] = trained.relation_vocab;
  meta["fingerprint"] = trained.fingerprint;
  meta["seed"] = trained.seed;
  nn::save_checkpoint(path, trained.model->state(), meta.dump());
}

TrainedModel load_trained(const std::string& path) {
  const json meta = json::parse(nn::read_checkpoint_meta(path));
  TrainedModel trained;
  try {
    trained.config.apply(meta.at("config").get<std::map<std::string, std::string>>());
    trained.relation_vocab = meta.at("relation_vocab").get<std::vector<std::string>>();
    trained.fingerprint = meta.at("fingerprint");
    trained.seed = meta.at("seed");
  } catch (const json::exception& e) {
    throw ValidationError(std::string("checkpoint meta is malformed: ") + e.what());
  }
  trained.model = std::make_unique<Model<float>>(trained.config.encoder);
  nn::load_checkpoint(path, trained.model->state());
  return trained;
}

Analysis analyze(Model<float>& model, const std::vector<Record>& records) {
  if (model.config().variant != Variant::kFull) {
    throw ValidationError("attention analysis needs the full variant (global attention)");
  }
  Analysis analysis;
  long total = 0;
  for (const auto& r : records) {
    if (r.n() > model.config().max_len) {
      throw ValidationError("example " + r.id + " has " + std::to_string(r.n()) + " nodes, above max_len " +
                            std::to_string(model.config().max_len));
    }
    const ModelOutput out = model.forward(model_input(r, model.config()));
    const AttentionDistance d = attention_distance(out.alpha_global);
    for (std::size_t h = 0; h < d.distance.size(); ++h) {
      for (std::size_t i = 0; i < d.distance[h].size(); ++i) {
        analysis.rows.push_back({r.id, static_cast<int>(h), static_cast<int>(i), d.argmax[h][i], d.distance[h][i]});
        total += d.distance[h][i];
      }
    }
    ++analysis.examples;
  }
  analysis.mean_distance = analysis.rows.empty() ? 0.0 : static_cast<double>(total) / analysis.rows.size();
  return analysis;
}

std::string analysis_csv(const Analysis& analysis) {
  std::string out = "example_id,head,node_index,argmax_index,distance\n";
  for (const auto& row : analysis.rows) {
    out += row.example_id + "," + std::to_string(row.head) + "," + std::to_string(row.node) + "," +
           std::to_string(row.argmax) + "," + std::to_string(row.distance) + "\n";
  }
  return out;
}

std::string analysis_summary_json(const Analysis& analysis) {
  json j;
  j["examples"] = analysis.examples;
  j["rows"] = analysis.rows.size();
  j["mean_distance"] = analysis.mean_distance;
  return j.dump(2) + "\n";
}

}  // namespace isdg::harness
