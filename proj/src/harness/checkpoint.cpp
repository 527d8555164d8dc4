#include <cstring>
#include <fstream>
#include <stdexcept>

#include "memsc/harness/harness.hpp"

namespace memsc::harness {

using numerics::Tensor;

namespace {

constexpr int kFormatVersion = 1;

std::vector<std::uint8_t> read_binary(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw std::runtime_error("cannot open " + path);
    return {std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
}

}  // namespace

std::string fnv1a64_hex(const void* data, std::size_t bytes) {
    const auto* p = static_cast<const std::uint8_t*>(data);
    std::uint64_t h = 0xcbf29ce484222325ULL;
    for (std::size_t i = 0; i < bytes; ++i) {
        h ^= p[i];
        h *= 0x100000001b3ULL;
    }
    char buf[19];
    std::snprintf(buf, sizeof(buf), "%016llx", static_cast<unsigned long long>(h));
    return buf;
}

void save_checkpoint(const ParameterSet& params, const nlohmann::json& config_echo,
                     const std::string& path_base) {
    std::vector<std::uint8_t> blob;
    nlohmann::json entries = nlohmann::json::array();
    std::size_t offset = 0;
    for (std::size_t i = 0; i < params.size(); ++i) {
        const auto& e = params.entry(i);
        nlohmann::json je;
        je["name"] = e.name;
        je["tag"] = numerics::param_tag_name(e.tag);
        je["shape"] = e.value.shape;
        je["offset"] = offset;
        je["count"] = e.value.numel();
        entries.push_back(je);
        for (double x : e.value.v) {
            const float f = static_cast<float>(x);
            std::uint32_t bits;
            std::memcpy(&bits, &f, sizeof(bits));
            for (int s = 0; s < 32; s += 8) blob.push_back(static_cast<std::uint8_t>(bits >> s));
        }
        offset += 4 * e.value.numel();
    }

    nlohmann::json manifest;
    manifest["format_version"] = kFormatVersion;
    manifest["precision"] = "f32";
    manifest["blob_bytes"] = blob.size();
    manifest["blob_fnv1a64"] = fnv1a64_hex(blob.data(), blob.size());
    manifest["config"] = config_echo;
    manifest["entries"] = entries;

    std::ofstream bin(path_base + ".bin", std::ios::binary);
    if (!bin) throw std::runtime_error("cannot write " + path_base + ".bin");
    bin.write(reinterpret_cast<const char*>(blob.data()),
              static_cast<std::streamsize>(blob.size()));
    bin.close();

    std::ofstream mf(path_base + ".manifest.json");
    if (!mf) throw std::runtime_error("cannot write " + path_base + ".manifest.json");
    mf << manifest.dump(2) << "\n";
}

LoadedCheckpoint load_checkpoint(const std::string& path_base) {
    std::ifstream mf(path_base + ".manifest.json");
    if (!mf) throw std::runtime_error("cannot open " + path_base + ".manifest.json");
    nlohmann::json manifest;
    try {
        mf >> manifest;
    } catch (const nlohmann::json::exception& e) {
        throw std::runtime_error("corrupt checkpoint manifest: " + std::string(e.what()));
    }

    if (manifest.value("format_version", -1) != kFormatVersion)
        throw std::runtime_error("checkpoint version mismatch in " + path_base);
    if (manifest.value("precision", "") != std::string("f32"))
        throw std::runtime_error("unsupported checkpoint precision in " + path_base);

    const std::vector<std::uint8_t> blob = read_binary(path_base + ".bin");
    if (blob.size() != manifest.value("blob_bytes", std::size_t{0}))
        throw std::runtime_error("checkpoint blob truncated: " + path_base + ".bin");
    const std::string hash = fnv1a64_hex(blob.data(), blob.size());
    if (hash != manifest.value("blob_fnv1a64", ""))
        throw std::runtime_error("checkpoint corruption (hash mismatch): " + path_base);

    LoadedCheckpoint out;
    out.blob_hash = hash;
    out.config_echo = manifest.value("config", nlohmann::json::object());
    for (const auto& je : manifest.at("entries")) {
        const std::string name = je.at("name");
        const std::vector<std::size_t> shape = je.at("shape").get<std::vector<std::size_t>>();
        const std::size_t offset = je.at("offset");
        const std::size_t count = je.at("count");
        if (numerics::shape_numel(shape) != count || offset + 4 * count > blob.size())
            throw std::runtime_error("checkpoint entry out of bounds: " + name);
        Tensor t = Tensor::zeros(shape);
        for (std::size_t i = 0; i < count; ++i) {
            std::uint32_t bits = 0;
            for (int s = 0; s < 4; ++s)
                bits |= static_cast<std::uint32_t>(blob[offset + 4 * i + s]) << (8 * s);
            float f;
            std::memcpy(&f, &bits, sizeof(f));
            t.v[i] = static_cast<double>(f);
        }
        out.params.add(name, numerics::param_tag_from_name(je.at("tag")), std::move(t));
    }
    return out;
}

}  // namespace memsc::harness
