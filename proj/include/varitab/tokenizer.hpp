#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <string_view>
#include <unordered_map>
#include <vector>

namespace varitab {

// Growable token dictionary shared across every table a model sees.
// Ids are dense and append-only: growing never reassigns an existing id,
// which is what keeps embeddings transferable across tables.
class Vocabulary {
public:
    static constexpr int64_t kPadId = 0;
    static constexpr int64_t kClsId = 1;
    static constexpr const char* kPadToken = "[pad]";
    static constexpr const char* kClsToken = "[cls]";
    // hash-bucket range for unknown tokens once the vocabulary is frozen
    static constexpr int64_t kOverflowSize = 1000;

    Vocabulary();

    int64_t size() const { return static_cast<int64_t>(id_to_token_.size()); }
    bool frozen() const { return frozen_; }
    void set_frozen(bool frozen) { frozen_ = frozen; }

    std::optional<int64_t> lookup(std::string_view token) const;
    int64_t add(const std::string& token);  // returns existing id if known
    const std::string& token(int64_t id) const;

    // one token per line, id order
    std::string serialize() const;
    static Vocabulary deserialize(const std::string& text);

    bool operator==(const Vocabulary& other) const { return id_to_token_ == other.id_to_token_; }

private:
    std::unordered_map<std::string, int64_t> token_to_id_;
    std::vector<std::string> id_to_token_;
    bool frozen_ = false;
};

struct TokenSequence {
    std::vector<int64_t> ids;
    std::string source_text;
};

// Lowercases, maps punctuation to spaces, splits on whitespace. Bytes >= 0x80
// pass through as word characters so UTF-8 text stays tokenizable.
std::vector<std::string> tokenize(std::string_view text);

// Unknown tokens grow the vocabulary when permitted; otherwise they map to a
// deterministic hash bucket in [size, size + kOverflowSize).
TokenSequence encode(const std::vector<std::string>& tokens, Vocabulary& vocab, bool allow_grow);

}  // namespace varitab
