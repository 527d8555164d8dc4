#include "memsc/data/babi.hpp"

#include <algorithm>
#include <cctype>
#include <fstream>
#include <numeric>
#include <sstream>
#include <stdexcept>
#include <unordered_map>

namespace memsc::data {

TokenList tokenize(const std::string& sentence) {
    TokenList out;
    std::istringstream ss(sentence);
    std::string word;
    while (ss >> word) {
        std::string puncts;
        while (!word.empty() && (word.back() == '.' || word.back() == '?' || word.back() == '!')) {
            puncts.insert(puncts.begin(), word.back());
            word.pop_back();
        }
        if (!word.empty()) {
            for (char& c : word) c = static_cast<char>(std::tolower(static_cast<unsigned char>(c)));
            out.push_back(word);
        }
        for (char p : puncts) out.push_back(std::string(1, p));
    }
    return out;
}

namespace {

[[noreturn]] void malformed(std::size_t line_no, const std::string& why) {
    throw std::runtime_error("malformed corpus line " + std::to_string(line_no) + ": " + why);
}

std::string trim(const std::string& s) {
    std::size_t b = 0, e = s.size();
    while (b < e && std::isspace(static_cast<unsigned char>(s[b]))) ++b;
    while (e > b && std::isspace(static_cast<unsigned char>(s[e - 1]))) --e;
    return s.substr(b, e - b);
}

}  // namespace

std::vector<Episode> parse_babi(std::istream& in) {
    std::vector<Episode> episodes;
    std::vector<TokenList> statements;                       // story so far
    std::unordered_map<std::size_t, std::size_t> line_to_statement;
    std::string raw;
    std::size_t line_no = 0;

    while (std::getline(in, raw)) {
        ++line_no;
        if (!raw.empty() && raw.back() == '\r') raw.pop_back();
        if (trim(raw).empty()) continue;

        std::size_t sp = raw.find(' ');
        if (sp == std::string::npos) malformed(line_no, "expected \"<id> <text>\"");
        std::size_t id = 0;
        try {
            std::size_t consumed = 0;
            id = std::stoul(raw.substr(0, sp), &consumed);
            if (consumed != sp) malformed(line_no, "non-numeric line id");
        } catch (const std::logic_error&) {
            malformed(line_no, "non-numeric line id");
        }
        if (id == 0) malformed(line_no, "line id must be positive");
        if (id == 1) {
            statements.clear();
            line_to_statement.clear();
        }

        const std::string rest = raw.substr(sp + 1);
        const std::size_t tab = rest.find('\t');
        if (tab == std::string::npos) {
            // statement
            TokenList toks = tokenize(rest);
            if (toks.empty()) malformed(line_no, "empty statement");
            line_to_statement[id] = statements.size();
            statements.push_back(std::move(toks));
            continue;
        }

        // question line: question \t answer [\t supporting ids]
        const std::string question_text = rest.substr(0, tab);
        std::string tail = rest.substr(tab + 1);
        std::string answer;
        std::string support_text;
        const std::size_t tab2 = tail.find('\t');
        if (tab2 == std::string::npos) {
            answer = trim(tail);
        } else {
            answer = trim(tail.substr(0, tab2));
            support_text = trim(tail.substr(tab2 + 1));
        }
        if (answer.empty()) malformed(line_no, "question without answer");

        Episode e;
        e.context = statements;
        e.question = tokenize(question_text);
        if (e.question.empty()) malformed(line_no, "empty question");
        for (char& c : answer) c = static_cast<char>(std::tolower(static_cast<unsigned char>(c)));
        e.answer = answer;

        std::istringstream sup(support_text);
        std::size_t sid = 0;
        while (sup >> sid) {
            auto it = line_to_statement.find(sid);
            if (it == line_to_statement.end())
                malformed(line_no, "supporting id " + std::to_string(sid) +
                                       " does not name a prior statement");
            e.supporting.push_back(it->second);
        }
        if (!sup.eof()) malformed(line_no, "non-numeric supporting id");
        episodes.push_back(std::move(e));
    }
    return episodes;
}

std::vector<Episode> parse_babi_file(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw std::runtime_error("cannot open corpus file: " + path);
    return parse_babi(in);
}

Vocabulary Vocabulary::build(const std::vector<Episode>& train_episodes) {
    if (train_episodes.empty()) throw std::invalid_argument("build_vocab: empty training split");
    Vocabulary v;
    v.tokens_ = {"<pad>", "<unk>"};
    std::unordered_map<std::string, std::int32_t> seen;
    auto add_tokens = [&](const TokenList& toks) {
        for (const std::string& t : toks) {
            if (seen.emplace(t, static_cast<std::int32_t>(v.tokens_.size())).second)
                v.tokens_.push_back(t);
        }
    };
    std::unordered_map<std::string, std::int32_t> seen_answers;
    for (const Episode& e : train_episodes) {
        for (const TokenList& s : e.context) add_tokens(s);
        add_tokens(e.question);
        if (seen_answers.emplace(e.answer, static_cast<std::int32_t>(v.answers_.size())).second)
            v.answers_.push_back(e.answer);
    }
    return v;
}

std::int32_t Vocabulary::token_id(const std::string& token) const {
    for (std::size_t i = 2; i < tokens_.size(); ++i)
        if (tokens_[i] == token) return static_cast<std::int32_t>(i);
    return kUnknown;
}

const std::string& Vocabulary::token(std::int32_t id) const {
    if (id < 0 || static_cast<std::size_t>(id) >= tokens_.size())
        throw std::out_of_range("token id out of range");
    return tokens_[static_cast<std::size_t>(id)];
}

std::int32_t Vocabulary::answer_id(const std::string& answer) const {
    for (std::size_t i = 0; i < answers_.size(); ++i)
        if (answers_[i] == answer) return static_cast<std::int32_t>(i);
    return -1;
}

const std::string& Vocabulary::answer(std::int32_t id) const {
    if (id < 0 || static_cast<std::size_t>(id) >= answers_.size())
        throw std::out_of_range("answer id out of range");
    return answers_[static_cast<std::size_t>(id)];
}

std::vector<std::int32_t> Vocabulary::encode_sentence(const TokenList& tokens) const {
    std::vector<std::int32_t> ids;
    ids.reserve(tokens.size());
    for (const std::string& t : tokens) ids.push_back(token_id(t));
    return ids;
}

TokenList Vocabulary::decode_sentence(const std::vector<std::int32_t>& ids) const {
    TokenList out;
    out.reserve(ids.size());
    for (std::int32_t id : ids)
        if (id != kPad) out.push_back(token(id));
    return out;
}

EncodedEpisode encode_episode(const Episode& e, const Vocabulary& vocab) {
    EncodedEpisode out;
    out.context.reserve(e.context.size());
    for (const TokenList& s : e.context) out.context.push_back(vocab.encode_sentence(s));
    out.question = vocab.encode_sentence(e.question);
    out.answer_id = vocab.answer_id(e.answer);
    out.supporting = e.supporting;
    return out;
}

std::vector<EncodedEpisode> encode_episodes(const std::vector<Episode>& episodes,
                                            const Vocabulary& vocab) {
    std::vector<EncodedEpisode> out;
    out.reserve(episodes.size());
    for (const Episode& e : episodes) out.push_back(encode_episode(e, vocab));
    return out;
}

Splits split(const std::vector<Episode>& episodes, std::uint64_t seed) {
    if (episodes.size() < 10)
        throw std::invalid_argument("split: need at least 10 episodes, got " +
                                    std::to_string(episodes.size()));
    std::vector<std::size_t> order(episodes.size());
    std::iota(order.begin(), order.end(), 0);
    Rng rng(Rng::mix({seed, 0x5917a2bULL, episodes.size()}));
    for (std::size_t i = order.size(); i > 1; --i)
        std::swap(order[i - 1], order[rng.below(i)]);

    const std::size_t n = episodes.size();
    const std::size_t n_train = (n * 8) / 10;
    const std::size_t n_val = n / 10;
    Splits s;
    for (std::size_t i = 0; i < n; ++i) {
        const Episode& e = episodes[order[i]];
        if (i < n_train)
            s.train.push_back(e);
        else if (i < n_train + n_val)
            s.validation.push_back(e);
        else
            s.test.push_back(e);
    }
    return s;
}

std::size_t max_context_length(const std::vector<Episode>& episodes) {
    std::size_t best = 0;
    for (const Episode& e : episodes) best = std::max(best, e.context.size());
    return best;
}

std::string generate_where_is_corpus(const GeneratorConfig& cfg) {
    static const std::vector<std::string> actors = {"mary", "john", "daniel", "sandra"};
    static const std::vector<std::string> places = {"bathroom", "hallway",  "garden",
                                                    "kitchen",  "bedroom", "office"};
    static const std::vector<std::string> verbs = {"moved to the", "went to the",
                                                   "journeyed to the", "travelled to the"};
    Rng rng(Rng::mix({cfg.seed, 0xdecafULL, cfg.stories}));
    std::ostringstream out;
    for (std::size_t story = 0; story < cfg.stories; ++story) {
        std::vector<int> location(actors.size(), -1);
        std::vector<std::size_t> last_move_line(actors.size(), 0);
        std::size_t line = 1;
        for (std::size_t fact = 0; fact < cfg.facts_per_story; ++fact) {
            const std::size_t actor = rng.below(actors.size());
            std::size_t place = rng.below(places.size());
            if (location[actor] >= 0 && static_cast<int>(place) == location[actor])
                place = (place + 1) % places.size();
            location[actor] = static_cast<int>(place);
            last_move_line[actor] = line;
            std::string name = actors[actor];
            name[0] = static_cast<char>(std::toupper(static_cast<unsigned char>(name[0])));
            out << line++ << ' ' << name << ' ' << verbs[rng.below(verbs.size())] << ' '
                << places[place] << ".\n";
            if (fact % 2 == 1) {
                // ask about an actor whose location is known
                std::vector<std::size_t> known;
                for (std::size_t a = 0; a < actors.size(); ++a)
                    if (location[a] >= 0) known.push_back(a);
                const std::size_t who = known[rng.below(known.size())];
                std::string name = actors[who];
                name[0] = static_cast<char>(std::toupper(static_cast<unsigned char>(name[0])));
                out << line++ << " Where is " << name << "?\t"
                    << places[static_cast<std::size_t>(location[who])] << '\t'
                    << last_move_line[who] << '\n';
            }
        }
    }
    return out.str();
}

}  // namespace memsc::data
