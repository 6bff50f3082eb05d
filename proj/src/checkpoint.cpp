#include "varitab/checkpoint.hpp"

#include <bit>
#include <cstdio>
#include <cstring>
#include <fstream>
#include <map>
#include <sstream>
#include <stdexcept>

namespace varitab {

namespace {

void put_u32(std::string& out, uint32_t v) {
    for (int i = 0; i < 4; ++i) out.push_back(static_cast<char>((v >> (8 * i)) & 0xff));
}

void put_u64(std::string& out, uint64_t v) {
    for (int i = 0; i < 8; ++i) out.push_back(static_cast<char>((v >> (8 * i)) & 0xff));
}

void put_f64(std::string& out, double v) {
    put_u64(out, std::bit_cast<uint64_t>(v));
}

class Reader {
public:
    Reader(const std::string& data, std::string path) : data_(data), path_(std::move(path)) {}

    uint32_t u32() {
        need(4);
        uint32_t v = 0;
        for (int i = 0; i < 4; ++i)
            v |= static_cast<uint32_t>(static_cast<unsigned char>(data_[pos_ + i])) << (8 * i);
        pos_ += 4;
        return v;
    }

    uint64_t u64() {
        need(8);
        uint64_t v = 0;
        for (int i = 0; i < 8; ++i)
            v |= static_cast<uint64_t>(static_cast<unsigned char>(data_[pos_ + i])) << (8 * i);
        pos_ += 8;
        return v;
    }

    double f64() { return std::bit_cast<double>(u64()); }

    std::string bytes(size_t n) {
        need(n);
        std::string s = data_.substr(pos_, n);
        pos_ += n;
        return s;
    }

    size_t pos() const { return pos_; }
    void seek(size_t p) { pos_ = p; }
    size_t remaining() const { return data_.size() - pos_; }

private:
    void need(size_t n) {
        if (pos_ + n > data_.size()) {
            throw std::runtime_error("checkpoint '" + path_ + "' is truncated");
        }
    }
    const std::string& data_;
    std::string path_;
    size_t pos_ = 0;
};

std::string tensor_bytes(const Tensor& t) {
    std::string out;
    put_u64(out, static_cast<uint64_t>(t.rank()));
    for (int64_t e : t.shape()) put_u64(out, static_cast<uint64_t>(e));
    for (double v : t.values()) put_f64(out, v);
    return out;
}

}  // namespace

void save_checkpoint(ModelState& model, const std::string& path) {
    auto tensors = model.named_tensors();

    std::string tensor_section;
    std::ostringstream manifest;
    manifest << "dim " << model.config.dim << '\n';
    manifest << "heads " << model.config.heads << '\n';
    manifest << "layers " << model.config.layers << '\n';
    manifest << "classes " << model.config.classes << '\n';
    manifest << "seed " << model.config.seed << '\n';
    manifest << "vocab_size " << model.vocab.size() << '\n';
    for (auto& [name, tensor] : tensors) {
        manifest << "tensor " << name << ' ' << tensor.rank();
        for (int64_t e : tensor.shape()) manifest << ' ' << e;
        manifest << ' ' << tensor_section.size() << '\n';
        tensor_section += tensor_bytes(tensor);
    }

    std::string manifest_text = manifest.str();
    std::string vocab_text = model.vocab.serialize();

    std::string blob;
    blob.append(kCheckpointMagic, 4);
    put_u32(blob, kCheckpointVersion);
    put_u64(blob, manifest_text.size());
    blob += manifest_text;
    put_u64(blob, vocab_text.size());
    blob += vocab_text;
    blob += tensor_section;

    const std::string tmp = path + ".tmp";
    {
        std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
        if (!out || !out.write(blob.data(), static_cast<std::streamsize>(blob.size()))) {
            std::remove(tmp.c_str());
            throw std::runtime_error("cannot write checkpoint '" + path + "'");
        }
    }
    if (std::rename(tmp.c_str(), path.c_str()) != 0) {
        std::remove(tmp.c_str());
        throw std::runtime_error("cannot move checkpoint into place at '" + path + "'");
    }
}

ModelState load_checkpoint(const std::string& path, LoadMode mode) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw std::runtime_error("cannot open checkpoint '" + path + "'");
    std::ostringstream buf;
    buf << in.rdbuf();
    const std::string data = buf.str();

    Reader r(data, path);
    const std::string magic = r.bytes(4);
    if (std::memcmp(magic.data(), kCheckpointMagic, 4) != 0) {
        throw std::runtime_error("'" + path + "' is not a checkpoint (bad magic)");
    }
    const uint32_t version = r.u32();
    if (version != kCheckpointVersion) {
        throw std::runtime_error("'" + path + "': unsupported checkpoint version " +
                                 std::to_string(version));
    }

    const uint64_t manifest_len = r.u64();
    const std::string manifest_text = r.bytes(manifest_len);
    const uint64_t vocab_len = r.u64();
    const std::string vocab_text = r.bytes(vocab_len);
    const size_t tensor_base = r.pos();

    ModelConfig config;
    int64_t vocab_size = -1;
    struct Entry {
        Shape shape;
        uint64_t offset;
    };
    std::map<std::string, Entry> index;
    std::vector<std::string> order;
    {
        std::istringstream lines(manifest_text);
        std::string key;
        while (lines >> key) {
            if (key == "dim") lines >> config.dim;
            else if (key == "heads") lines >> config.heads;
            else if (key == "layers") lines >> config.layers;
            else if (key == "classes") lines >> config.classes;
            else if (key == "seed") lines >> config.seed;
            else if (key == "vocab_size") lines >> vocab_size;
            else if (key == "tensor") {
                std::string name;
                int64_t rank = 0;
                lines >> name >> rank;
                Entry e;
                for (int64_t i = 0; i < rank; ++i) {
                    int64_t ext = 0;
                    lines >> ext;
                    e.shape.push_back(ext);
                }
                lines >> e.offset;
                if (!lines) throw std::runtime_error("'" + path + "': malformed manifest");
                index[name] = std::move(e);
                order.push_back(name);
            } else {
                throw std::runtime_error("'" + path + "': unknown manifest key '" + key + "'");
            }
        }
    }
    if (vocab_size < 2) throw std::runtime_error("'" + path + "': manifest lacks vocab_size");

    ModelState model = ModelState::create(config);
    model.vocab = Vocabulary::deserialize(vocab_text);
    if (model.vocab.size() != vocab_size) {
        throw std::runtime_error("'" + path + "': vocabulary section holds " +
                                 std::to_string(model.vocab.size()) + " tokens, manifest says " +
                                 std::to_string(vocab_size));
    }
    model.sync_vocab();

    auto tensors = model.named_tensors();
    if (tensors.size() != index.size()) {
        throw std::runtime_error("'" + path + "': manifest lists " + std::to_string(index.size()) +
                                 " tensors, model expects " + std::to_string(tensors.size()));
    }
    for (auto& [name, tensor] : tensors) {
        auto it = index.find(name);
        if (it == index.end()) {
            throw std::runtime_error("'" + path + "': manifest is missing tensor '" + name + "'");
        }
        Tensor t = tensor;
        if (it->second.shape != t.shape()) {
            throw std::runtime_error("'" + path + "': tensor '" + name + "' has shape " +
                                     shape_str(it->second.shape) + ", model expects " +
                                     shape_str(t.shape()));
        }
        r.seek(tensor_base + it->second.offset);
        const uint64_t rank = r.u64();
        if (rank != static_cast<uint64_t>(t.rank())) {
            throw std::runtime_error("'" + path + "': tensor '" + name +
                                     "' rank mismatch between manifest and payload");
        }
        Shape payload_shape;
        for (uint64_t i = 0; i < rank; ++i) payload_shape.push_back(static_cast<int64_t>(r.u64()));
        if (payload_shape != t.shape()) {
            throw std::runtime_error("'" + path + "': tensor '" + name +
                                     "' extents mismatch between manifest and payload");
        }
        for (auto& v : t.values()) v = r.f64();
    }

    model.vocab.set_frozen(mode == LoadMode::exact);
    return model;
}

}  // namespace varitab
