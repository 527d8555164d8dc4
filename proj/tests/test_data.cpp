#include <set>
#include <sstream>
#include <stdexcept>

#include "doctest.h"
#include "memsc/data/babi.hpp"

using namespace memsc::data;

TEST_CASE("tokenizer lowercases and splits terminal punctuation") {
    CHECK(tokenize("Mary moved.") == TokenList{"mary", "moved", "."});
    CHECK(tokenize("Where is Mary?") == TokenList{"where", "is", "mary", "?"});
    CHECK(tokenize("  spaced   out  ") == TokenList{"spaced", "out"});
}

TEST_CASE("parser builds one episode per question with prior statements") {
    std::istringstream story(
        "1 Mary moved to the bathroom.\n"
        "2 John went to the hallway.\n"
        "3 Where is Mary?\tbathroom\t1\n"
        "4 Daniel went to the garden.\n"
        "5 Where is Daniel?\tgarden\t4\n"
        "1 Sandra moved to the office.\n"
        "2 Where is Sandra?\toffice\t1\n");
    const std::vector<Episode> eps = parse_babi(story);
    REQUIRE(eps.size() == 3);

    CHECK(eps[0].context.size() == 2);
    CHECK(eps[0].question == TokenList{"where", "is", "mary", "?"});
    CHECK(eps[0].answer == "bathroom");
    CHECK(eps[0].supporting == std::vector<std::size_t>{0});

    // supporting line 4 is the third statement (the question at line 3 does
    // not count)
    CHECK(eps[1].context.size() == 3);
    CHECK(eps[1].supporting == std::vector<std::size_t>{2});

    // the id reset started a fresh story: no context leaks across
    CHECK(eps[2].context.size() == 1);
    CHECK(eps[2].context[0][0] == "sandra");
}

TEST_CASE("parser maps multi-fact supporting ids") {
    std::istringstream story(
        "1 John is in the playground.\n"
        "2 Bob is in the office.\n"
        "3 John picked up the football.\n"
        "4 Where is the football?\tplayground\t1 3\n");
    const std::vector<Episode> eps = parse_babi(story);
    REQUIRE(eps.size() == 1);
    CHECK(eps[0].supporting == std::vector<std::size_t>{0, 2});
}

TEST_CASE("parser reports malformed lines with their number") {
    auto expect_error_at = [](const std::string& text, const char* fragment) {
        std::istringstream in(text);
        try {
            parse_babi(in);
            FAIL_CHECK("expected a parse error for: " << text);
        } catch (const std::runtime_error& e) {
            CHECK(std::string(e.what()).find(fragment) != std::string::npos);
        }
    };
    expect_error_at("1 ok line\nnot numbered\n", "line 2");
    expect_error_at("x bad id\n", "line 1");
    expect_error_at("1 fact.\n2 Where?\tans\t7\n", "line 2");
    expect_error_at("1 Where?\tanswer\tzz\n", "line 1");
}

TEST_CASE("vocabulary ids are first-occurrence deterministic") {
    std::istringstream story(
        "1 Mary moved to the bathroom.\n"
        "2 Mary moved to the garden.\n"
        "3 Where is Mary?\tgarden\t2\n");
    const std::vector<Episode> eps = parse_babi(story);
    const Vocabulary vocab = Vocabulary::build(eps);

    CHECK(vocab.token_id("mary") == 2);  // 0 pad, 1 unknown
    CHECK(vocab.token_id("moved") == 3);
    CHECK(vocab.token_id("nonexistent") == Vocabulary::kUnknown);
    CHECK(vocab.answer_size() == 1);
    CHECK(vocab.answer_id("garden") == 0);
    CHECK(vocab.answer_id("bathroom") == -1);

    const Vocabulary again = Vocabulary::build(eps);
    CHECK(again.size() == vocab.size());
    for (std::size_t id = 0; id < vocab.size(); ++id)
        CHECK(again.token(static_cast<std::int32_t>(id)) ==
              vocab.token(static_cast<std::int32_t>(id)));

    // encode/decode roundtrip reproduces the normalized tokens
    const auto ids = vocab.encode_sentence(eps[0].context[0]);
    CHECK(vocab.decode_sentence(ids) == eps[0].context[0]);

    // unknown tokens encode to the reserved id rather than failing
    const auto unk = vocab.encode_sentence({"martian", "moved", "."});
    CHECK(unk[0] == Vocabulary::kUnknown);
}

TEST_CASE("split is seed-deterministic, disjoint and 8:1:1") {
    GeneratorConfig gen;
    gen.stories = 2000;  // x5 questions = 10k episodes
    gen.seed = 3;
    std::istringstream corpus(generate_where_is_corpus(gen));
    const std::vector<Episode> eps = parse_babi(corpus);
    REQUIRE(eps.size() == 10000);

    const Splits s = split(eps, 7);
    CHECK(s.train.size() == 8000);
    CHECK(s.validation.size() == 1000);
    CHECK(s.test.size() == 1000);

    auto key = [](const Episode& e) {
        std::string k = e.answer + "|";
        for (const auto& sent : e.context)
            for (const auto& t : sent) k += t + " ";
        k += "|";
        for (const auto& t : e.question) k += t + " ";
        return k;
    };
    std::multiset<std::string> original, partitioned;
    for (const auto& e : eps) original.insert(key(e));
    for (const auto* part : {&s.train, &s.validation, &s.test})
        for (const auto& e : *part) partitioned.insert(key(e));
    CHECK(original == partitioned);

    const Splits s2 = split(eps, 7);
    CHECK(key(s2.train.front()) == key(s.train.front()));
    CHECK(key(s2.test.back()) == key(s.test.back()));

    CHECK_THROWS_AS(split(std::vector<Episode>(eps.begin(), eps.begin() + 5), 1),
                    std::invalid_argument);
}

TEST_CASE("generated corpus is consistent with its answers") {
    GeneratorConfig gen;
    gen.stories = 50;
    gen.seed = 11;
    std::istringstream corpus(generate_where_is_corpus(gen));
    const std::vector<Episode> eps = parse_babi(corpus);
    CHECK(eps.size() == 50 * 5);
    for (const Episode& e : eps) {
        REQUIRE(e.supporting.size() == 1);
        const TokenList& fact = e.context[e.supporting[0]];
        // the supporting fact names the asked actor and ends at the answer
        CHECK(fact.front() == e.question[2]);
        CHECK(fact[fact.size() - 2] == e.answer);
        // the asked actor moves nowhere later in the context
        for (std::size_t i = e.supporting[0] + 1; i < e.context.size(); ++i)
            CHECK(e.context[i].front() != fact.front());
    }
}

TEST_CASE("episode encoding carries answers and supporting facts") {
    std::istringstream story(
        "1 Mary moved to the bathroom.\n"
        "2 Where is Mary?\tbathroom\t1\n");
    const std::vector<Episode> eps = parse_babi(story);
    const Vocabulary vocab = Vocabulary::build(eps);
    const EncodedEpisode enc = encode_episode(eps[0], vocab);
    CHECK(enc.context.size() == 1);
    CHECK(enc.answer_id == 0);
    CHECK(enc.supporting == std::vector<std::size_t>{0});
    CHECK(enc.question.back() == vocab.token_id("?"));
}
