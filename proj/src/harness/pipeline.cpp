#include "isdg/harness/pipeline.hpp"

#include <filesystem>
#include <fstream>
#include <ostream>
#include <sstream>

#include <json.hpp>

#include "isdg/errors.hpp"
#include "isdg/harness/corpus.hpp"
#include "isdg/tokenizer.hpp"

namespace isdg::harness {
namespace fs = std::filesystem;
namespace {

using nlohmann::json;

constexpr std::uint64_t kTestSeedSalt = 0xA5A5A5A5ULL;

void ensure_dir(const std::string& dir) {
  std::error_code ec;
  fs::create_directories(dir, ec);
  if (ec) throw ValidationError("cannot create directory " + dir + ": " + ec.message());
}

std::string sibling(const std::string& file, const std::string& name) {
  return (fs::path(file).parent_path() / name).string();
}

void check_against_checkpoint(const TrainedModel& trained, const std::vector<Record>& records) {
  for (const auto& r : records) {
    if (r.relation_vocab != trained.relation_vocab) {
      throw ValidationError("relation vocabulary of example " + r.id +
                            " differs from the checkpoint:\n" + vocab_diff(trained.relation_vocab, r.relation_vocab));
    }
  }
}

}  // namespace

std::string read_text_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw ValidationError("cannot open " + path);
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

void write_text_file(const std::string& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw ValidationError("cannot write " + path);
  out << text;
}

std::vector<std::string> read_lines(const std::string& path) {
  std::istringstream in(read_text_file(path));
  std::vector<std::string> out;
  std::string line;
  while (std::getline(in, line)) {
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (!line.empty()) out.push_back(line);
  }
  return out;
}

std::string resolve_data_path(const std::string& data, const std::string& split) {
  if (fs::is_directory(data)) {
    const auto path = fs::path(data) / (split + ".jsonl");
    if (!fs::exists(path)) throw ValidationError("no " + split + ".jsonl in " + data);
    return path.string();
  }
  if (!fs::exists(data)) throw ValidationError("data path does not exist: " + data);
  return data;
}

std::string resolve_checkpoint_path(const std::string& checkpoint) {
  if (fs::is_directory(checkpoint)) return (fs::path(checkpoint) / "model.ckpt").string();
  return checkpoint;
}

void run_generate(const GenerateRequest& request, const std::string& out_dir) {
  if (request.n_train < 1) throw ValidationError("--n must be at least 1");
  if (request.n_test < 0) throw ValidationError("--test-n must be non-negative");
  const Lexicon lexicon = build_lexicon(request.seed, request.vocab_size);
  GeneratorOptions options;
  options.vocab_size = request.vocab_size;
  options.min_depth = request.min_depth;
  options.max_depth = request.max_depth;

  std::vector<std::pair<std::string, std::vector<SyntheticExample>>> splits;
  options.seed = request.seed;
  options.n_examples = request.n_train;
  splits.emplace_back("train", generate_corpus(options, lexicon, "train"));
  if (request.n_test > 0) {
    options.seed = request.seed ^ kTestSeedSalt;
    options.n_examples = request.n_test;
    splits.emplace_back("test", generate_corpus(options, lexicon, "test"));
  }
  ensure_dir(out_dir);
  for (const auto& [name, examples] : splits) {
    write_text_file((fs::path(out_dir) / (name + ".conllu")).string(), corpus_conllu(examples));
    write_text_file((fs::path(out_dir) / (name + ".answers.jsonl")).string(), corpus_answers_jsonl(examples));
  }
  std::string vocab;
  for (const auto& piece : lexicon.pieces) vocab += piece + "\n";
  write_text_file((fs::path(out_dir) / "vocab.txt").string(), vocab);
}

PreprocessSummary run_preprocess(const PreprocessRequest& request) {
  if (!fs::is_directory(request.conllu_dir)) throw ValidationError("not a directory: " + request.conllu_dir);
  const WordPieceTokenizer tokenizer = WordPieceTokenizer::from_file(request.tokenizer_vocab);

  std::map<std::string, std::vector<Pair>> splits;
  for (const auto& entry : fs::directory_iterator(request.conllu_dir)) {
    if (entry.path().extension() != ".conllu") continue;
    const std::string split = entry.path().stem().string();
    const auto answers = fs::path(request.conllu_dir) / (split + ".answers.jsonl");
    if (!fs::exists(answers)) throw ValidationError("missing " + answers.string());
    splits[split] = pair_documents(read_text_file(entry.path().string()), read_text_file(answers.string()));
  }
  if (splits.empty()) throw ValidationError("no .conllu files in " + request.conllu_dir);

  PreprocessSummary summary;
  if (!request.relation_vocab_from.empty()) {
    summary.vocab = RelationVocab::from_names(read_lines(request.relation_vocab_from));
  } else if (splits.count("train")) {
    summary.vocab = vocab_from_pairs(splits.at("train"));
  } else {
    std::vector<Pair> all;
    for (const auto& [name, pairs] : splits) all.insert(all.end(), pairs.begin(), pairs.end());
    summary.vocab = vocab_from_pairs(all);
  }

  ensure_dir(request.out_dir);
  for (const auto& [name, pairs] : splits) {
    // Training cannot use examples whose answer was truncated away; held-out
    // splits keep them so they count against the score.
    auto result = preprocess_pairs(pairs, tokenizer, summary.vocab, request.options, name == "train");
    write_records((fs::path(request.out_dir) / (name + ".jsonl")).string(), result.records);
    summary.records[name] = static_cast<int>(result.records.size());
    summary.skipped[name] = result.skipped;
  }
  std::string names;
  for (const auto& n : summary.vocab.names()) names += n + "\n";
  write_text_file((fs::path(request.out_dir) / "relation_vocab.txt").string(), names);
  json meta;
  meta["piece_vocab"] = tokenizer.vocab_size();
  meta["max_len"] = request.options.max_len;
  meta["max_path_len"] = request.options.max_path_len;
  meta["records"] = summary.records;
  meta["skipped"] = summary.skipped;
  write_text_file((fs::path(request.out_dir) / "meta.json").string(), meta.dump(2) + "\n");
  return summary;
}

TrainResult run_train(const TrainRequest& request, std::ostream* progress) {
  TrainConfig config;
  std::map<std::string, std::string> values;
  if (!request.config_path.empty()) values = parse_config_text(read_text_file(request.config_path));
  for (const auto& [k, v] : request.overrides) values[k] = v;
  if (request.variant) values["variant"] = to_string(*request.variant);

  const std::string data = resolve_data_path(request.data, "train");
  const std::string meta_path = sibling(data, "meta.json");
  if (!values.count("piece_vocab") && fs::exists(meta_path)) {
    values["piece_vocab"] = std::to_string(json::parse(read_text_file(meta_path)).at("piece_vocab").get<int>());
  }
  // The relation vocabulary size always comes from the corpus; a config value
  // that disagrees is a mismatch rather than an override.
  std::optional<int> configured_relations;
  if (auto it = values.find("relation_vocab"); it != values.end()) {
    configured_relations = std::stoi(it->second);
    values.erase(it);
  }
  config.apply(values);

  const auto records = read_records(data);
  std::vector<std::string> expected;
  std::string vocab_path = request.relation_vocab;
  if (vocab_path.empty() && fs::exists(sibling(data, "relation_vocab.txt"))) vocab_path = sibling(data, "relation_vocab.txt");
  if (!vocab_path.empty()) expected = read_lines(vocab_path);
  const auto vocab = check_vocabulary(records, expected);
  if (configured_relations && *configured_relations != 0 && *configured_relations != static_cast<int>(vocab.size())) {
    throw ValidationError("config expects " + std::to_string(*configured_relations) + " relation types, corpus has " +
                          std::to_string(vocab.size()));
  }

  ensure_dir(request.out_dir);
  std::ofstream log((fs::path(request.out_dir) / "train_log.jsonl").string());
  if (!log) throw ValidationError("cannot write training log in " + request.out_dir);
  TrainResult result = train(config, records, request.seed, &log);
  save_trained((fs::path(request.out_dir) / "model.ckpt").string(), result.trained);
  write_text_file((fs::path(request.out_dir) / "config.txt").string(), config_text(result.trained.config.to_map()));
  write_text_file((fs::path(request.out_dir) / "fingerprint.txt").string(), result.trained.fingerprint + "\n");
  if (progress) {
    *progress << "trained " << to_string(result.trained.config.encoder.variant) << " for " << result.epochs_run
              << " epochs, final loss " << result.final_loss << ", fingerprint " << result.trained.fingerprint << "\n";
  }
  return result;
}

EvalReport run_eval(const EvalRequest& request) {
  TrainedModel trained = load_trained(resolve_checkpoint_path(request.checkpoint));
  const auto records = read_records(resolve_data_path(request.data, request.split));
  check_against_checkpoint(trained, records);
  EvalReport report = evaluate(*trained.model, records);
  write_text_file(request.report, report_json(report));
  const std::string predictions = request.predictions.empty() ? request.report + ".predictions.jsonl" : request.predictions;
  write_text_file(predictions, predictions_jsonl(report));
  return report;
}

Analysis run_analyze(const AnalyzeRequest& request) {
  TrainedModel trained = load_trained(resolve_checkpoint_path(request.checkpoint));
  const auto records = read_records(resolve_data_path(request.data, request.split));
  check_against_checkpoint(trained, records);
  Analysis analysis = analyze(*trained.model, records);
  write_text_file(request.csv, analysis_csv(analysis));
  write_text_file(request.summary.empty() ? request.csv + ".summary.json" : request.summary,
                  analysis_summary_json(analysis));
  return analysis;
}

}  // namespace isdg::harness
