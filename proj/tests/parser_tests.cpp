#include <string>
#include <vector>

#include "calibench/errors.hpp"
#include "calibench/parser.hpp"
#include "doctest.h"
#include "support.hpp"

using namespace calibench;

namespace {

RawResponse raw_baseline(std::string text) {
  RawResponse r;
  r.question_id = "q1";
  r.model = "mock-a";
  r.frame = Frame::Baseline;
  r.text = std::move(text);
  return r;
}

RawResponse raw_framed(Frame frame, std::string text) {
  RawResponse r = raw_baseline(std::move(text));
  r.frame = frame;
  return r;
}

}  // namespace

TEST_CASE("answer labels round-trip") {
  for (Answer a : {Answer::Yes, Answer::No, Answer::Missing}) {
    auto parsed = parse_answer(to_string(a));
    REQUIRE(parsed.has_value());
    CHECK(*parsed == a);
  }
  CHECK_FALSE(parse_answer("maybe").has_value());
}

TEST_CASE("a protocol-shaped completion parses into answer, confidences, and knowledge") {
  ModelResponse r = parse_baseline(raw_baseline(
      "The answer to the question is yes. The listed facts support this conclusion.\n"
      "\n"
      "Reasoning: I recalled the facts below and checked the asked relation against them "
      "step by step.\n"
      "\n"
      "Key pieces of knowledge:\n"
      "1. Kyoto locate in Japan.\n"
      "2. Mount Fuji rises 3776 meters.\n"
      "\n"
      "The probability that my answer is correct is 85%.\n"
      "The probability that the facts underlying my answer are correct is 90%.\n"
      "The probability that the reasoning underlying my answer is correct is 80%.\n"));

  CHECK(r.answer == Answer::Yes);
  REQUIRE(r.conf_answer.has_value());
  CHECK(*r.conf_answer == 0.85);
  REQUIRE(r.conf_facts.has_value());
  CHECK(*r.conf_facts == 0.90);
  REQUIRE(r.conf_reasoning.has_value());
  CHECK(*r.conf_reasoning == 0.80);
  REQUIRE(r.derived_conf.has_value());
  CHECK(*r.derived_conf == doctest::Approx(0.72).epsilon(1e-12));
  // Enumerated sentences survive as knowledge items — including ones with
  // bare numbers, which are not mistaken for confidence statements.
  CHECK(r.knowledge_items ==
        std::vector<std::string>{"Kyoto locate in Japan.", "Mount Fuji rises 3776 meters."});
  CHECK(r.flags.empty());
  CHECK(r.question_id == "q1");
  CHECK(r.model == "mock-a");
}

TEST_CASE("the first answer declaration wins and respects word boundaries") {
  CHECK(parse_baseline(raw_baseline("The answer to the question is: **No**. Clearly."))
            .answer == Answer::No);
  CHECK(parse_baseline(raw_baseline("THE ANSWER TO THE QUESTION IS YES, I believe."))
            .answer == Answer::Yes);
  ModelResponse flip = parse_baseline(raw_baseline(
      "The answer to the question is no. But if asked again, the answer to the question "
      "is yes."));
  CHECK(flip.answer == Answer::No);
  // "nothing" must not read as "no"; with no later declaration the answer is
  // missing and flagged.
  ModelResponse nothing =
      parse_baseline(raw_baseline("The answer to the question is nothing I can state."));
  CHECK(nothing.answer == Answer::Missing);
  CHECK(nothing.has_flag("missing-answer"));
  // A later well-formed declaration still counts after a false start.
  CHECK(parse_baseline(raw_baseline("The answer to the question is nuanced; on balance "
                                    "the answer to the question is no."))
            .answer == Answer::No);
}

TEST_CASE("percent spellings and probability decimals are all accepted") {
  auto conf = [](const std::string& line) {
    ModelResponse r =
        parse_baseline(raw_baseline("The answer to the question is yes.\n" + line + "\n"));
    return r.conf_answer;
  };
  CHECK(conf("The probability that my answer is correct is 95%.") == 0.95);
  CHECK(conf("My answer is correct with 95 percent probability.") == 0.95);
  CHECK(conf("Confidence in my answer: 95") == 0.95);  // bare number near a cue word
  CHECK(conf("My confidence in this answer is 0.9") == 0.9);  // already a probability
  CHECK_FALSE(conf("My answer rests on 3 facts.").has_value());  // no cue word
}

TEST_CASE("out-of-range percentages are flagged and left unset") {
  ModelResponse r = parse_baseline(
      raw_baseline("The answer to the question is yes.\n"
                   "The probability that my answer is correct is 140%.\n"));
  CHECK_FALSE(r.conf_answer.has_value());
  CHECK(r.has_flag("confidence-out-of-range"));
}

TEST_CASE("repeated keyword slots flag a conflict and keep the first value") {
  ModelResponse r = parse_baseline(
      raw_baseline("The answer to the question is no.\n"
                   "The probability that my answer is correct is 70%.\n"
                   "To restate: my answer is correct with probability 65%.\n"));
  CHECK(r.conf_answer == 0.70);
  CHECK(r.has_flag("conflict-answer"));
}

TEST_CASE("keywordless percent lines fill slots in elicitation order") {
  ModelResponse r = parse_baseline(
      raw_baseline("The answer to the question is yes.\n"
                   "My estimate: 80%\n"
                   "My estimate: 70%\n"
                   "My estimate: 60%\n"));
  CHECK(r.conf_answer == 0.80);
  CHECK(r.conf_facts == 0.70);
  CHECK(r.conf_reasoning == 0.60);
  REQUIRE(r.derived_conf.has_value());
  CHECK(*r.derived_conf == doctest::Approx(0.42).epsilon(1e-12));

  // Keyword matches take their slots first; order fills only the gaps.
  ModelResponse mixed = parse_baseline(
      raw_baseline("The answer to the question is yes.\n"
                   "The probability the facts are right is 99%.\n"
                   "My estimate: 80%\n"
                   "My estimate: 60%\n"));
  CHECK(mixed.conf_facts == 0.99);
  CHECK(mixed.conf_answer == 0.80);
  CHECK(mixed.conf_reasoning == 0.60);
}

TEST_CASE("textual confidence statements are flagged, not guessed at") {
  ModelResponse r = parse_baseline(
      raw_baseline("The answer to the question is yes.\n"
                   "I am quite confident in this answer.\n"));
  CHECK_FALSE(r.conf_answer.has_value());
  CHECK(r.has_flag("textual-confidence"));
}

TEST_CASE("transport status carries into parse flags") {
  RawResponse truncated = raw_baseline("The answer to the question is yes.");
  truncated.status = ResponseStatus::Truncated;
  ModelResponse t = parse_baseline(truncated);
  CHECK(t.has_flag("truncated"));
  CHECK(t.answer == Answer::Yes);

  RawResponse failed = raw_baseline("");
  failed.status = ResponseStatus::ProviderError;
  ModelResponse f = parse_baseline(failed);
  CHECK(f.has_flag("provider-error"));
  CHECK(f.has_flag("missing-answer"));
  CHECK(f.answer == Answer::Missing);
  CHECK_FALSE(f.conf_answer.has_value());
}

TEST_CASE("framed responses resolve the answer from the reported probability") {
  ModelResponse hi = parse_frame(
      raw_framed(Frame::YesFrame, "The probability that the correct answer is 'Yes' is 80%.\n"));
  CHECK(hi.answer == Answer::Yes);
  CHECK(hi.conf_answer == 0.8);

  ModelResponse lo = parse_frame(
      raw_framed(Frame::YesFrame, "The probability that the correct answer is 'Yes' is 20%.\n"));
  CHECK(lo.answer == Answer::No);
  CHECK(lo.conf_answer == 0.8);

  ModelResponse no_hi = parse_frame(
      raw_framed(Frame::NoFrame, "The probability that the correct answer is 'No' is 80%.\n"));
  CHECK(no_hi.answer == Answer::No);
  CHECK(no_hi.conf_answer == 0.8);

  ModelResponse no_lo = parse_frame(
      raw_framed(Frame::NoFrame, "The probability that the correct answer is 'No' is 20%.\n"));
  CHECK(no_lo.answer == Answer::Yes);
  CHECK(no_lo.conf_answer == 0.8);
}

TEST_CASE("a fifty-fifty report is a tie, not an answer") {
  ModelResponse r = parse_frame(
      raw_framed(Frame::YesFrame, "The probability that the correct answer is 'Yes' is 50%.\n"));
  CHECK(r.answer == Answer::Missing);
  CHECK(r.has_flag("tie"));
  CHECK(r.conf_answer == 0.5);
}

TEST_CASE("framed parsing skips unusable percents and flags gaps") {
  ModelResponse skipped = parse_frame(
      raw_framed(Frame::YesFrame, "I would say 150% at first.\nOn reflection: 60%.\n"));
  CHECK(skipped.has_flag("confidence-out-of-range"));
  CHECK(skipped.conf_answer == 0.6);
  CHECK(skipped.answer == Answer::Yes);

  ModelResponse empty = parse_frame(raw_framed(Frame::NoFrame, "I cannot say.\n"));
  CHECK(empty.answer == Answer::Missing);
  CHECK(empty.has_flag("missing-answer"));
  CHECK_FALSE(empty.conf_answer.has_value());

  CHECK_THROWS_WITH_AS(parse_frame(raw_baseline("anything")),
                       "parse_frame called on a baseline response", UsageError);
}

TEST_CASE("parse_response dispatches on the recorded frame") {
  CHECK(parse_response(raw_baseline("The answer to the question is yes.")).answer ==
        Answer::Yes);
  CHECK(parse_response(raw_framed(Frame::NoFrame, "My estimate: 90%.")).answer == Answer::No);
}

TEST_CASE("knowledge sentences resolve against predicate surface forms") {
  KnowledgeBase kb;
  PredicateMeta locate;
  locate.name = "locate_in";
  locate.surface = "is located in";
  kb.register_predicate(locate);
  PredicateMeta in;
  in.name = "in";
  kb.register_predicate(in);

  auto result = extract_triples({"Kyoto is located in Japan.", "Kyoto locate in Japan."}, kb,
                                Domain::Geography);
  CHECK(result.unparseable == 0);
  REQUIRE(result.triples.size() == 2);
  for (const auto& t : result.triples) {
    CHECK(t == KnowledgeTriple{"Kyoto", "locate_in", "Japan", Domain::Geography});
  }

  // The longest surface wins over a predicate embedded inside it.
  PredicateMeta located;
  located.name = "located_in";
  kb.register_predicate(located);
  auto longest = extract_triples({"The shrine located in Nara."}, kb, Domain::Geography);
  REQUIRE(longest.triples.size() == 1);
  CHECK(longest.triples[0].predicate == "located_in");
}

TEST_CASE("unmatched sentences fall back to a first-verb split or count as unparseable") {
  KnowledgeBase kb;
  auto result = extract_triples(
      {"Haruki Murakami wrote Norwegian Wood.", "Japan.", "", "Japan exists."}, kb,
      Domain::Culture);
  REQUIRE(result.triples.size() == 1);
  CHECK(result.triples[0] ==
        KnowledgeTriple{"Haruki Murakami", "wrote", "Norwegian Wood", Domain::Culture});
  CHECK(result.unparseable == 3);
}

TEST_CASE("parse quality aggregates by model, frame, and effective temperature") {
  std::vector<RawResponse> raws;
  std::vector<ModelResponse> parsed;

  RawResponse a = raw_baseline("The answer to the question is yes.\nMy estimate: 90%\n");
  raws.push_back(a);
  parsed.push_back(parse_response(a));

  RawResponse b = raw_baseline("No usable declaration here.");
  raws.push_back(b);
  parsed.push_back(parse_response(b));

  RawResponse c = raw_framed(Frame::YesFrame,
                             "The probability that the correct answer is 'Yes' is 50%.\n");
  c.effective_temperature = "unsupported";
  raws.push_back(c);
  parsed.push_back(parse_response(c));

  auto quality = parse_quality(raws, parsed);
  REQUIRE(quality.size() == 2);
  const ParseGroupStats& base = quality.at("mock-a|baseline|0");
  CHECK(base.n == 2);
  CHECK(base.missing_answer == 1);
  CHECK(base.missing_confidence == 1);
  CHECK(base.ties == 0);
  const ParseGroupStats& framed = quality.at("mock-a|yes-frame|unsupported");
  CHECK(framed.n == 1);
  CHECK(framed.ties == 1);
  CHECK(framed.missing_answer == 1);  // ties resolve to Missing

  CHECK_THROWS_WITH_AS(parse_quality(raws, {}),
                       "parse_quality: raw and parsed vectors must align", UsageError);
}

TEST_CASE("parsed responses save and load losslessly") {
  support::TempDir dir("parser-io");
  ModelResponse r;
  r.question_id = "q9";
  r.model = "mock-z";
  r.frame = Frame::YesFrame;
  r.temperature = 0.3;
  r.answer = Answer::No;
  r.conf_answer = 0.8;
  r.knowledge_items = {"Kyoto locate in Japan."};
  r.flags = {"tie"};

  ModelResponse bare;
  bare.question_id = "q10";
  bare.model = "mock-z";
  bare.frame = Frame::Baseline;
  bare.answer = Answer::Missing;

  std::string path = dir.file("parsed.jsonl");
  save_parsed({r, bare}, path, "0123456789abcdef0123456789abcdef");
  auto loaded = load_parsed(path);
  REQUIRE(loaded.size() == 2);
  CHECK(loaded[0].question_id == "q9");
  CHECK(loaded[0].frame == Frame::YesFrame);
  CHECK(loaded[0].answer == Answer::No);
  CHECK(loaded[0].conf_answer == 0.8);
  CHECK_FALSE(loaded[0].conf_facts.has_value());
  CHECK_FALSE(loaded[0].derived_conf.has_value());
  CHECK(loaded[0].knowledge_items == r.knowledge_items);
  CHECK(loaded[0].flags == r.flags);
  CHECK(loaded[1].answer == Answer::Missing);
  CHECK_FALSE(loaded[1].conf_answer.has_value());

  CHECK_THROWS_AS(load_parsed(dir.file("absent.jsonl")), DataError);
  std::string bad = dir.file("bad.jsonl");
  support::write_file(bad, "not json\n");
  CHECK_THROWS_WITH_AS(load_parsed(bad), doctest::Contains((bad + ":1: ").c_str()), DataError);
}
