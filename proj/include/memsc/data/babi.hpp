#pragma once

#include <cstdint>
#include <iosfwd>
#include <string>
#include <vector>

#include "memsc/rng.hpp"

// Scenario question-answering corpus handling: parsing the numbered-line text
// format, vocabulary construction from the training split, episode encoding,
// and the seed-deterministic train/validation/test partition.

namespace memsc::data {

using TokenList = std::vector<std::string>;

// One question instance: the story's prior statements in order, the question,
// the answer word, and the 0-based statement indices of the supporting facts.
struct Episode {
    std::vector<TokenList> context;
    TokenList question;
    std::string answer;
    std::vector<std::size_t> supporting;
};

// lowercase, whitespace-split, terminal punctuation (.?!) as its own token
TokenList tokenize(const std::string& sentence);

// Text format: statements "n <sentence>", questions
// "n <question>\t<answer>\t<supporting line ids>"; a line id of 1 starts a
// new story. Supporting ids are line numbers within the story and are mapped
// to statement indices. Malformed lines raise std::runtime_error naming the
// 1-based line number in the stream.
std::vector<Episode> parse_babi(std::istream& in);
std::vector<Episode> parse_babi_file(const std::string& path);

// id 0 is padding, id 1 the reserved unknown-token id; remaining ids are
// assigned by first occurrence in the training split. The answer vocabulary
// is separate and never contains the unknown id.
class Vocabulary {
public:
    static constexpr std::int32_t kPad = 0;
    static constexpr std::int32_t kUnknown = 1;

    static Vocabulary build(const std::vector<Episode>& train_episodes);

    std::size_t size() const { return tokens_.size(); }
    std::size_t answer_size() const { return answers_.size(); }

    std::int32_t token_id(const std::string& token) const;  // kUnknown if absent
    const std::string& token(std::int32_t id) const;
    // -1 when the answer never appeared in the training split
    std::int32_t answer_id(const std::string& answer) const;
    const std::string& answer(std::int32_t id) const;

    std::vector<std::int32_t> encode_sentence(const TokenList& tokens) const;
    TokenList decode_sentence(const std::vector<std::int32_t>& ids) const;

private:
    std::vector<std::string> tokens_;   // index = id
    std::vector<std::string> answers_;  // index = answer id
};

// Token-id form consumed by the transceiver.
struct EncodedEpisode {
    std::vector<std::vector<std::int32_t>> context;
    std::vector<std::int32_t> question;
    std::int32_t answer_id = -1;
    std::vector<std::size_t> supporting;
};

EncodedEpisode encode_episode(const Episode& e, const Vocabulary& vocab);
std::vector<EncodedEpisode> encode_episodes(const std::vector<Episode>& episodes,
                                            const Vocabulary& vocab);

struct Splits {
    std::vector<Episode> train;
    std::vector<Episode> validation;
    std::vector<Episode> test;
};

// Disjoint 8:1:1 partition after a seed-deterministic shuffle; sizes are
// floor(0.8 n) / floor(0.1 n) / remainder, so 10k episodes give 8k/1k/1k.
// Throws std::invalid_argument when fewer than 10 episodes are supplied.
Splits split(const std::vector<Episode>& episodes, std::uint64_t seed);

std::size_t max_context_length(const std::vector<Episode>& episodes);

// Deterministic scenario generator in the same text format: actors move
// between locations, questions ask where an actor currently is. Used for
// desk-scale runs; real corpus files parse through the same path.
struct GeneratorConfig {
    std::size_t stories = 500;
    std::size_t facts_per_story = 10;   // one question after every 2 facts
    std::uint64_t seed = 7;
};

std::string generate_where_is_corpus(const GeneratorConfig& cfg);

}  // namespace memsc::data
