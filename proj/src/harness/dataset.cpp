#include "isdg/harness/dataset.hpp"

#include <exception>
#include <fstream>
#include <map>
#include <set>
#include <sstream>

#include <json.hpp>

#include "isdg/errors.hpp"

namespace isdg::harness {
namespace {

using nlohmann::json;

int encode_element(const PathElement& e) { return e.is_node() ? e.index : -(e.index + 1); }

PathElement decode_element(int v) {
  return v >= 0 ? PathElement::node(v) : PathElement::relation(static_cast<RelationId>(-v - 1));
}

json paths_to_json(const std::vector<Path>& paths) {
  json out = json::array();
  for (const auto& path : paths) {
    json p = json::array();
    for (const auto& e : path) p.push_back(encode_element(e));
    out.push_back(std::move(p));
  }
  return out;
}

std::vector<Path> paths_from_json(const json& j) {
  std::vector<Path> out;
  for (const auto& p : j) {
    Path path;
    for (int v : p) path.push_back(decode_element(v));
    out.push_back(std::move(path));
  }
  return out;
}

}  // namespace

ModelInput Record::to_input() const {
  ModelInput input;
  input.n = n();
  for (const auto& node : nodes) {
    input.piece_ids.push_back(node.piece_id);
    input.segment.push_back(node.segment);
    input.upos.push_back(node.upos);
    input.answerable.push_back(!node.special && node.segment == 1 ? 1 : 0);
  }
  input.rel = rel;
  input.paths = paths;
  return input;
}

std::vector<std::string> Record::answer_texts() const {
  std::vector<std::string> out;
  for (const auto& a : answers) out.push_back(a.text);
  return out;
}

std::string Record::span_text(int start_node, int end_node) const {
  if (start_node < 0 || end_node >= n() || start_node > end_node) {
    throw ValidationError("span (" + std::to_string(start_node) + ", " + std::to_string(end_node) +
                          ") invalid for " + std::to_string(n()) + " nodes");
  }
  const std::size_t begin = char_spans[start_node].start;
  const std::size_t end = char_spans[end_node].end;
  if (end < begin || end > context_text.size()) throw ValidationError("span outside context text");
  return context_text.substr(begin, end - begin);
}

std::string record_to_line(const Record& r) {
  json j;
  j["id"] = r.id;
  json nodes = json::array();
  for (const auto& n : r.nodes) {
    nodes.push_back({{"text", n.text}, {"piece_id", n.piece_id}, {"word", n.word}, {"upos", n.upos},
                     {"segment", n.segment}, {"special", n.special}});
  }
  j["nodes"] = std::move(nodes);
  j["rel_matrix"] = std::vector<int>(r.rel.begin(), r.rel.end());
  j["relation_vocab"] = r.relation_vocab;
  j["roots"] = r.roots;
  j["max_path_len"] = r.paths.max_path_len;
  j["out_paths"] = paths_to_json(r.paths.out_path);
  j["in_paths"] = paths_to_json(r.paths.in_path);
  j["gold_start"] = r.gold_start >= 0 ? json(r.gold_start) : json(nullptr);
  j["gold_end"] = r.gold_end >= 0 ? json(r.gold_end) : json(nullptr);
  json spans = json::array();
  for (const auto& s : r.char_spans) spans.push_back({s.start, s.end});
  j["char_spans"] = std::move(spans);
  j["context_text"] = r.context_text;
  json answers = json::array();
  for (const auto& a : r.answers) answers.push_back({{"text", a.text}, {"start", a.span.start}, {"end", a.span.end}});
  j["answers"] = std::move(answers);
  return j.dump();
}

Record record_from_line(std::string_view line) {
  try {
    const json j = json::parse(line);
    Record r;
    r.id = j.at("id");
    for (const auto& n : j.at("nodes")) {
      r.nodes.push_back({n.at("text"), n.at("piece_id"), n.at("word"), n.at("upos"), n.at("segment"),
                         n.at("special")});
    }
    for (int v : j.at("rel_matrix")) {
      if (v < 0 || v > 255) throw ValidationError("relation id out of range in record " + r.id);
      r.rel.push_back(static_cast<RelationId>(v));
    }
    if (r.rel.size() != r.nodes.size() * r.nodes.size()) {
      throw ValidationError("record " + r.id + ": rel_matrix is not n x n");
    }
    r.relation_vocab = j.at("relation_vocab").get<std::vector<std::string>>();
    r.roots = j.at("roots").get<std::vector<int>>();
    r.paths.max_path_len = j.value("max_path_len", 0);
    r.paths.out_path = paths_from_json(j.at("out_paths"));
    r.paths.in_path = paths_from_json(j.at("in_paths"));
    if (r.paths.out_path.size() != r.nodes.size() || r.paths.in_path.size() != r.nodes.size()) {
      throw ValidationError("record " + r.id + ": path table size does not match node count");
    }
    r.gold_start = j.at("gold_start").is_null() ? -1 : j.at("gold_start").get<int>();
    r.gold_end = j.at("gold_end").is_null() ? -1 : j.at("gold_end").get<int>();
    for (const auto& s : j.at("char_spans")) r.char_spans.push_back({s.at(0), s.at(1)});
    r.context_text = j.at("context_text");
    for (const auto& a : j.at("answers")) r.answers.push_back({a.at("text"), {a.at("start"), a.at("end")}});
    return r;
  } catch (const json::exception& e) {
    throw ValidationError(std::string("malformed record: ") + e.what());
  }
}

std::vector<Record> read_records(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ValidationError("cannot open " + path);
  std::vector<Record> out;
  std::string line;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    out.push_back(record_from_line(line));
  }
  return out;
}

void write_records(const std::string& path, const std::vector<Record>& records) {
  std::ofstream out(path);
  if (!out) throw ValidationError("cannot write " + path);
  for (const auto& r : records) out << record_to_line(r) << '\n';
}

Record make_record(const std::string& id, const UDDocument& question, const UDDocument& context,
                   const std::vector<GoldAnswer>& answers, const SubwordTokenizer& tokenizer,
                   const RelationVocab& vocab, const PreprocessOptions& options) {
  const AlignedSequence seq = build_aligned_sequence(question, context, tokenizer, options.max_len);
  const ISDGraph graph = build_isdg(seq, vocab);
  Record r;
  r.id = id;
  for (int i = 0; i < seq.size(); ++i) {
    const auto& node = seq.nodes[i];
    NodeRecord nr;
    nr.text = node.text;
    nr.piece_id = node.piece_id;
    nr.word = node.word_ref;
    nr.special = node.is_special;
    nr.segment = seq.segment[i] == Segment::kContext ? 1 : 0;
    nr.upos = node.is_special ? kSpecialUpos : static_cast<int>(seq.words[node.word_ref].upos);
    r.nodes.push_back(nr);
    // question spans index the question text; only context spans are recoverable
    r.char_spans.push_back(nr.segment == 1 && !nr.special ? node.char_span : CharSpan{});
  }
  r.rel = graph.rel;
  r.relation_vocab = vocab.names();
  r.roots = graph.roots;
  r.paths = truncate_paths(build_soft_paths(seq, graph), options.max_path_len);
  r.context_text = seq.context_text;
  r.answers = answers;
  if (!answers.empty()) {
    if (auto nodes = map_gold_answer(seq, answers.front().span)) {
      r.gold_start = nodes->first;
      r.gold_end = nodes->second;
    }
  }
  return r;
}

std::vector<Pair> pair_documents(std::string_view conllu_text, std::string_view answers_jsonl) {
  std::map<std::string, std::vector<GoldAnswer>> answers;
  std::istringstream in{std::string(answers_jsonl)};
  std::string line;
  int line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.empty()) continue;
    try {
      const json j = json::parse(line);
      std::vector<GoldAnswer> list;
      for (const auto& a : j.at("answers")) list.push_back({a.at("text"), {a.at("start"), a.at("end")}});
      answers[j.at("id")] = std::move(list);
    } catch (const json::exception& e) {
      throw ValidationError("answers line " + std::to_string(line_no) + ": " + e.what());
    }
  }
  std::vector<Pair> pairs;
  std::map<std::string, std::size_t> open;
  for (auto& doc : parse_conllu_documents(conllu_text)) {
    const auto dot = doc.doc_id.rfind('.');
    if (dot == std::string::npos) throw ValidationError("document id '" + doc.doc_id + "' lacks a .q/.c suffix");
    const std::string id = doc.doc_id.substr(0, dot);
    const std::string kind = doc.doc_id.substr(dot + 1);
    auto it = open.find(id);
    if (it == open.end()) {
      it = open.emplace(id, pairs.size()).first;
      pairs.push_back({id, {}, {}, {}});
    }
    Pair& pair = pairs[it->second];
    if (kind == "q") {
      pair.question = std::move(doc);
    } else if (kind == "c") {
      pair.context = std::move(doc);
    } else {
      throw ValidationError("document id '" + doc.doc_id + "' must end in .q or .c");
    }
  }
  for (auto& pair : pairs) {
    if (pair.question.sentences.empty() || pair.context.sentences.empty()) {
      throw ValidationError("example " + pair.id + " needs both a question and a context document");
    }
    auto it = answers.find(pair.id);
    if (it == answers.end()) throw ValidationError("no answers for example " + pair.id);
    pair.answers = it->second;
  }
  return pairs;
}

PreprocessResult preprocess_pairs(const std::vector<Pair>& pairs, const SubwordTokenizer& tokenizer,
                                  const RelationVocab& vocab, const PreprocessOptions& options,
                                  bool skip_unanswerable) {
  const int count = static_cast<int>(pairs.size());
  std::vector<Record> records(count);
  std::vector<std::exception_ptr> errors(count);
#pragma omp parallel for schedule(dynamic)
  for (int k = 0; k < count; ++k) {
    try {
      records[k] = make_record(pairs[k].id, pairs[k].question, pairs[k].context, pairs[k].answers, tokenizer,
                               vocab, options);
    } catch (...) {
      errors[k] = std::current_exception();
    }
  }
  for (const auto& e : errors) {
    if (e) std::rethrow_exception(e);
  }
  PreprocessResult result;
  for (auto& r : records) {
    if (skip_unanswerable && !r.has_gold()) {
      ++result.skipped;
      continue;
    }
    result.records.push_back(std::move(r));
  }
  return result;
}

RelationVocab vocab_from_pairs(const std::vector<Pair>& pairs) {
  std::vector<std::string> labels;
  for (const auto& p : pairs) {
    for (const auto* doc : {&p.question, &p.context}) {
      for (const auto& s : doc->sentences) {
        for (const auto& w : s.words) labels.push_back(w.deprel);
      }
    }
  }
  return RelationVocab::from_labels(labels);
}

std::string vocab_diff(const std::vector<std::string>& expected, const std::vector<std::string>& actual) {
  const std::set<std::string> a(expected.begin(), expected.end());
  const std::set<std::string> b(actual.begin(), actual.end());
  std::ostringstream out;
  for (const auto& x : a) {
    if (!b.count(x)) out << "- " << x << "\n";
  }
  for (const auto& x : b) {
    if (!a.count(x)) out << "+ " << x << "\n";
  }
  if (out.str().empty() && expected != actual) out << "same labels, different order\n";
  return out.str();
}

}  // namespace isdg::harness
