#include <doctest.h>

#include "isdg/ud.hpp"
#include "support.hpp"

using namespace isdg;

namespace {

int error_sentence(const std::string& text) {
  try {
    parse_conllu(text);
  } catch (const ConlluError& e) {
    return e.sentence();
  }
  return -1;
}

std::string error_message(const std::string& text) {
  try {
    parse_conllu(text);
  } catch (const ConlluError& e) {
    return e.what();
  }
  return {};
}

const char* kBobRan =
    "# text = Bob ran.\n"
    "1\tBob\tBob\tPROPN\t_\t_\t2\tnsubj\t_\t_\n"
    "2\tran.\trun\tVERB\t_\t_\t0\troot\t_\t_\n"
    "\n";

}  // namespace

TEST_CASE("minimal sentence parses with its root") {
  const UDDocument doc = parse_conllu(kBobRan);
  REQUIRE(doc.sentences.size() == 1);
  const auto& s = doc.sentences[0];
  REQUIRE(s.words.size() == 2);
  CHECK(s.words[s.root()].text == "ran.");
  CHECK(s.words[0].head == 1);
  CHECK(s.words[1].head == kRootHead);
  CHECK(s.words[0].upos == Upos::PROPN);
  CHECK(s.raw_text == "Bob ran.");
}

TEST_CASE("multi-word token rows annotate the expanded words") {
  const UDDocument doc = parse_conllu(
      "# text = quiero imponerla\n"
      "1\tquiero\t_\tVERB\t_\t_\t0\troot\t_\t_\n"
      "2-3\timponerla\t_\t_\t_\t_\t_\t_\t_\t_\n"
      "2\timponer\t_\tVERB\t_\t_\t1\txcomp\t_\t_\n"
      "3\tla\t_\tPRON\t_\t_\t2\tobj\t_\t_\n"
      "\n");
  const auto& words = doc.sentences[0].words;
  REQUIRE(words.size() == 3);
  CHECK_FALSE(words[0].mwt_range.has_value());
  REQUIRE(words[1].mwt_range.has_value());
  CHECK(*words[1].mwt_range == MwtRange{2, 3});
  CHECK(*words[2].mwt_range == MwtRange{2, 3});
  const auto& tokens = doc.sentences[0].raw_tokens;
  REQUIRE(tokens.size() == 2);
  CHECK(tokens[1].text == "imponerla");
  CHECK(tokens[1].first_word == 1);
  CHECK(tokens[1].last_word == 2);
}

TEST_CASE("head out of range names the sentence and line") {
  const std::string bad =
      std::string(kBobRan) +
      "# text = a b c\n"
      "1\ta\t_\tNOUN\t_\t_\t9\tnsubj\t_\t_\n"
      "2\tb\t_\tVERB\t_\t_\t0\troot\t_\t_\n"
      "3\tc\t_\tNOUN\t_\t_\t2\tobj\t_\t_\n"
      "\n";
  CHECK(error_sentence(bad) == 2);
  const std::string msg = error_message(bad);
  CHECK(msg.find("sentence 2") != std::string::npos);
  CHECK(msg.find("line 6") != std::string::npos);
  CHECK(msg.find("head") != std::string::npos);
}

TEST_CASE("validation errors") {
  SUBCASE("column count") {
    CHECK(error_message("1\tBob\t_\tPROPN\t_\t_\t0\troot\t_\n\n").find("10 tab-separated") != std::string::npos);
  }
  SUBCASE("non-numeric id") {
    CHECK(error_message("x\tBob\t_\tPROPN\t_\t_\t0\troot\t_\t_\n\n").find("non-numeric ID") != std::string::npos);
  }
  SUBCASE("no root") {
    CHECK(error_message("1\ta\t_\tNOUN\t_\t_\t2\tnsubj\t_\t_\n2\tb\t_\tVERB\t_\t_\t1\tobj\t_\t_\n\n")
              .find("root") != std::string::npos);
  }
  SUBCASE("two roots") {
    CHECK(error_message("1\ta\t_\tNOUN\t_\t_\t0\troot\t_\t_\n2\tb\t_\tVERB\t_\t_\t0\troot\t_\t_\n\n")
              .find("2 root words") != std::string::npos);
  }
  SUBCASE("cycle") {
    CHECK(error_message("1\ta\t_\tNOUN\t_\t_\t2\tnsubj\t_\t_\n2\tb\t_\tVERB\t_\t_\t1\tobj\t_\t_\n"
                        "3\tc\t_\tVERB\t_\t_\t0\troot\t_\t_\n\n")
              .find("cyclic") != std::string::npos);
  }
  SUBCASE("self head") {
    CHECK(error_message("1\ta\t_\tNOUN\t_\t_\t1\tnsubj\t_\t_\n2\tb\t_\tVERB\t_\t_\t0\troot\t_\t_\n\n")
              .find("own head") != std::string::npos);
  }
  SUBCASE("enhanced rows are rejected") {
    CHECK(error_message("1\ta\t_\tNOUN\t_\t_\t0\troot\t_\t_\n1.1\tb\t_\tVERB\t_\t_\t_\t_\t_\t_\n\n")
              .find("enhanced") != std::string::npos);
  }
  SUBCASE("unknown upos") {
    CHECK(error_message("1\ta\t_\tNOUNY\t_\t_\t0\troot\t_\t_\n\n").find("UPOS") != std::string::npos);
  }
  SUBCASE("empty input") { CHECK_THROWS_AS(parse_conllu("# just a comment\n"), ConlluError); }
}

TEST_CASE("relation subtypes are stripped and normalization is idempotent") {
  const UDDocument doc = parse_conllu(
      "1\ta\t_\tNOUN\t_\t_\t2\tnsubj:pass\t_\t_\n"
      "2\tb\t_\tVERB\t_\t_\t0\troot\t_\t_\n"
      "3\tc\t_\tNOUN\t_\t_\t2\tobl:tmod:extra\t_\t_\n\n");
  CHECK(doc.sentences[0].words[0].deprel == "nsubj");
  CHECK(doc.sentences[0].words[2].deprel == "obl");
  for (const std::string label : {"nsubj:pass", "obl", "acl:relcl", "a:b:c", ""}) {
    const std::string once = normalize_deprel(label);
    CHECK(once.find(':') == std::string::npos);
    CHECK(normalize_deprel(once) == once);
  }
}

TEST_CASE("ignored columns do not affect the parse") {
  const UDDocument a = parse_conllu("1\tBob\tbob\tPROPN\tNNP\tNumber=Sing\t2\tnsubj\t2:nsubj\tSpaceAfter=No\n"
                                    "2\tran\trun\tVERB\tVBD\t_\t0\troot\t0:root\t_\n\n");
  const UDDocument b = parse_conllu("1\tBob\t_\tPROPN\t_\t_\t2\tnsubj\t_\t_\n2\tran\t_\tVERB\t_\t_\t0\troot\t_\t_\n\n");
  CHECK(a == b);
}

TEST_CASE("documents split on newdoc comments") {
  const std::string text = "# newdoc id = ex1.q\n" + std::string(kBobRan) + "# newdoc id = ex1.c\n" + kBobRan + kBobRan;
  const auto docs = parse_conllu_documents(text);
  REQUIRE(docs.size() == 2);
  CHECK(docs[0].doc_id == "ex1.q");
  CHECK(docs[1].doc_id == "ex1.c");
  CHECK(docs[1].sentences.size() == 2);
  CHECK(document_text(docs[1]) == "Bob ran. Bob ran.");
  CHECK(sentence_offsets(docs[1]) == std::vector<std::size_t>{0, 9});
}

TEST_CASE("property: write then parse round trips, heads form trees") {
  isdg::nn::Rng rng(41);
  for (int trial = 0; trial < 200; ++trial) {
    UDDocument doc = testsupport::random_document(rng, rng.uniform_int(1, 4), 1, 12, -1, 0.2);
    doc.doc_id = "doc" + std::to_string(trial);
    const UDDocument again = parse_conllu(write_conllu(doc));
    REQUIRE(again == doc);
    for (const auto& s : doc.sentences) {
      int edges = 0;
      for (const auto& w : s.words) {
        CHECK(w.head != w.index - 1);
        if (w.head != kRootHead) ++edges;
        int at = w.index - 1;
        int steps = 0;
        while (s.words[at].head != kRootHead && steps <= static_cast<int>(s.words.size())) {
          at = s.words[at].head;
          ++steps;
        }
        CHECK(at == s.root());
      }
      CHECK(edges == static_cast<int>(s.words.size()) - 1);
    }
  }
}
