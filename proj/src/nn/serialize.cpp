#include "tonesr/nn/serialize.hpp"

#include <cstdio>
#include <cstring>
#include <map>
#include <memory>
#include <stdexcept>

namespace tonesr::nn {

namespace {
struct FileCloser {
    void operator()(FILE* f) const {
        if (f) fclose(f);
    }
};
using FilePtr = std::unique_ptr<FILE, FileCloser>;

[[noreturn]] void fail(const std::string& path, const char* what) {
    throw std::runtime_error(path + ": " + what);
}
}  // namespace

void save_weights(const std::string& path, const ParamStore& store) {
    FilePtr fp(fopen(path.c_str(), "wb"));
    if (!fp) fail(path, "cannot open for writing");
    const uint32_t version = 1;
    const uint32_t count = static_cast<uint32_t>(store.params().size());
    fwrite("TSRW", 1, 4, fp.get());
    fwrite(&version, 4, 1, fp.get());
    fwrite(&count, 4, 1, fp.get());
    for (const auto& pr : store.params()) {
        const auto* p = &pr;
        const uint16_t nl = static_cast<uint16_t>(p->name.size());
        fwrite(&nl, 2, 1, fp.get());
        fwrite(p->name.data(), 1, nl, fp.get());
        const uint8_t ndims = 4;
        fwrite(&ndims, 1, 1, fp.get());
        const uint32_t dims[4] = {static_cast<uint32_t>(p->v.n), static_cast<uint32_t>(p->v.c),
                                  static_cast<uint32_t>(p->v.h), static_cast<uint32_t>(p->v.w)};
        fwrite(dims, 4, 4, fp.get());
        if (fwrite(p->v.data(), 4, p->v.numel(), fp.get()) != p->v.numel())
            fail(path, "short write");
    }
}

void load_weights(const std::string& path, ParamStore& store) {
    FilePtr fp(fopen(path.c_str(), "rb"));
    if (!fp) fail(path, "cannot open");
    char magic[4];
    uint32_t version = 0, count = 0;
    if (fread(magic, 1, 4, fp.get()) != 4 || memcmp(magic, "TSRW", 4) != 0)
        fail(path, "bad weights magic");
    if (fread(&version, 4, 1, fp.get()) != 1 || version != 1) fail(path, "unsupported version");
    if (fread(&count, 4, 1, fp.get()) != 1) fail(path, "truncated header");

    std::map<std::string, std::vector<float>> tensors;
    for (uint32_t i = 0; i < count; ++i) {
        uint16_t nl = 0;
        if (fread(&nl, 2, 1, fp.get()) != 1) fail(path, "truncated tensor header");
        std::string name(nl, '\0');
        if (fread(name.data(), 1, nl, fp.get()) != nl) fail(path, "truncated tensor name");
        uint8_t ndims = 0;
        if (fread(&ndims, 1, 1, fp.get()) != 1 || ndims != 4) fail(path, "bad tensor rank");
        uint32_t dims[4];
        if (fread(dims, 4, 4, fp.get()) != 4) fail(path, "truncated dims");
        const size_t numel =
            static_cast<size_t>(dims[0]) * dims[1] * dims[2] * dims[3];
        std::vector<float> data(numel);
        if (fread(data.data(), 4, numel, fp.get()) != numel) fail(path, "truncated data");
        tensors.emplace(std::move(name), std::move(data));
    }
    for (auto& pr : store.params()) {
        auto* p = &pr;
        auto it = tensors.find(p->name);
        if (it == tensors.end()) fail(path, ("missing tensor " + p->name).c_str());
        if (it->second.size() != p->v.numel())
            fail(path, ("size mismatch for " + p->name).c_str());
        p->v.v = it->second;
    }
}

}  // namespace tonesr::nn
