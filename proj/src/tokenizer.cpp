#include "varitab/tokenizer.hpp"

#include <sstream>
#include <stdexcept>

#include "varitab/rng.hpp"

namespace varitab {

Vocabulary::Vocabulary() {
    id_to_token_ = {kPadToken, kClsToken};
    token_to_id_ = {{kPadToken, kPadId}, {kClsToken, kClsId}};
}

std::optional<int64_t> Vocabulary::lookup(std::string_view token) const {
    auto it = token_to_id_.find(std::string(token));
    if (it == token_to_id_.end()) return std::nullopt;
    return it->second;
}

int64_t Vocabulary::add(const std::string& token) {
    auto it = token_to_id_.find(token);
    if (it != token_to_id_.end()) return it->second;
    if (frozen_) throw std::logic_error("Vocabulary::add: vocabulary is frozen");
    const int64_t id = size();
    id_to_token_.push_back(token);
    token_to_id_.emplace(token, id);
    return id;
}

const std::string& Vocabulary::token(int64_t id) const {
    if (id < 0 || id >= size()) throw std::out_of_range("Vocabulary::token: id out of range");
    return id_to_token_[static_cast<size_t>(id)];
}

std::string Vocabulary::serialize() const {
    std::string out;
    for (const auto& t : id_to_token_) {
        out += t;
        out += '\n';
    }
    return out;
}

Vocabulary Vocabulary::deserialize(const std::string& text) {
    Vocabulary vocab;
    std::istringstream lines(text);
    std::string line;
    int64_t id = 0;
    while (std::getline(lines, line)) {
        if (id == kPadId) {
            if (line != kPadToken) throw std::runtime_error("vocabulary: id 0 must be [pad]");
        } else if (id == kClsId) {
            if (line != kClsToken) throw std::runtime_error("vocabulary: id 1 must be [cls]");
        } else {
            if (line.empty()) throw std::runtime_error("vocabulary: empty token line");
            vocab.add(line);
        }
        ++id;
    }
    if (id < 2) throw std::runtime_error("vocabulary: missing reserved tokens");
    return vocab;
}

std::vector<std::string> tokenize(std::string_view text) {
    std::vector<std::string> words;
    std::string word;
    for (unsigned char c : text) {
        char keep = 0;
        if (c >= 'a' && c <= 'z') keep = static_cast<char>(c);
        else if (c >= 'A' && c <= 'Z') keep = static_cast<char>(c - 'A' + 'a');
        else if (c >= '0' && c <= '9') keep = static_cast<char>(c);
        else if (c >= 0x80) keep = static_cast<char>(c);
        if (keep) {
            word += keep;
        } else if (!word.empty()) {
            words.push_back(std::move(word));
            word.clear();
        }
    }
    if (!word.empty()) words.push_back(std::move(word));
    return words;
}

TokenSequence encode(const std::vector<std::string>& tokens, Vocabulary& vocab, bool allow_grow) {
    TokenSequence seq;
    seq.ids.reserve(tokens.size());
    for (const auto& t : tokens) {
        if (!seq.source_text.empty()) seq.source_text += ' ';
        seq.source_text += t;
        if (auto id = vocab.lookup(t)) {
            seq.ids.push_back(*id);
        } else if (allow_grow && !vocab.frozen()) {
            seq.ids.push_back(vocab.add(t));
        } else {
            seq.ids.push_back(vocab.size() +
                              static_cast<int64_t>(fnv1a64(t) % Vocabulary::kOverflowSize));
        }
    }
    return seq;
}

}  // namespace varitab
