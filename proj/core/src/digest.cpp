// Copyright 2026 The scatterfield authors
// SPDX-License-Identifier: Apache-2.0

#include "scatterfield/digest.h"

#include <openssl/evp.h>

#include <array>
#include <fstream>
#include <memory>

#include "scatterfield/error.h"

namespace scatterfield {

namespace {

struct CtxDeleter {
    void operator()(EVP_MD_CTX* ctx) const { EVP_MD_CTX_free(ctx); }
};
using CtxPtr = std::unique_ptr<EVP_MD_CTX, CtxDeleter>;

std::string finish_hex(EVP_MD_CTX* ctx) {
    std::array<unsigned char, EVP_MAX_MD_SIZE> md{};
    unsigned int len = 0;
    if (EVP_DigestFinal_ex(ctx, md.data(), &len) != 1)
        fail(Errc::numeric, "sha256: digest finalization failed");
    static const char* hex = "0123456789abcdef";
    std::string out(2 * len, '0');
    for (unsigned int i = 0; i < len; ++i) {
        out[2 * i] = hex[md[i] >> 4];
        out[2 * i + 1] = hex[md[i] & 0xf];
    }
    return out;
}

}  // namespace

std::string sha256_hex(const void* data, size_t size) {
    CtxPtr ctx(EVP_MD_CTX_new());
    if (!ctx || EVP_DigestInit_ex(ctx.get(), EVP_sha256(), nullptr) != 1)
        fail(Errc::numeric, "sha256: context initialization failed");
    if (size > 0 && EVP_DigestUpdate(ctx.get(), data, size) != 1)
        fail(Errc::numeric, "sha256: update failed");
    return finish_hex(ctx.get());
}

std::string sha256_hex(const std::vector<uint8_t>& data) {
    return sha256_hex(data.data(), data.size());
}

std::string sha256_hex(const std::string& data) {
    return sha256_hex(data.data(), data.size());
}

std::string sha256_file_hex(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) fail(Errc::io, "sha256: cannot open '" + path + "'");
    CtxPtr ctx(EVP_MD_CTX_new());
    if (!ctx || EVP_DigestInit_ex(ctx.get(), EVP_sha256(), nullptr) != 1)
        fail(Errc::numeric, "sha256: context initialization failed");
    std::array<char, 65536> buf;
    while (in) {
        in.read(buf.data(), buf.size());
        std::streamsize got = in.gcount();
        if (got > 0 && EVP_DigestUpdate(ctx.get(), buf.data(), size_t(got)) != 1)
            fail(Errc::numeric, "sha256: update failed");
    }
    if (in.bad()) fail(Errc::io, "sha256: read error on '" + path + "'");
    return finish_hex(ctx.get());
}

}  // namespace scatterfield
