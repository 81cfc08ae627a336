#include "tla/tensor.hpp"

#include <cstring>
#include <fstream>

namespace tla {

namespace {

constexpr char kMagic[4] = {'T', '3', 'D', '1'};

void write_u64(std::ostream& os, uint64_t v) {
    unsigned char buf[8];
    for (int i = 0; i < 8; ++i) buf[i] = static_cast<unsigned char>(v >> (8 * i));
    os.write(reinterpret_cast<const char*>(buf), 8);
}

uint64_t read_u64(std::istream& is) {
    unsigned char buf[8];
    is.read(reinterpret_cast<char*>(buf), 8);
    uint64_t v = 0;
    for (int i = 0; i < 8; ++i) v |= static_cast<uint64_t>(buf[i]) << (8 * i);
    return v;
}

[[noreturn]] void malformed(const std::string& path, std::streamoff offset, const std::string& what) {
    throw std::runtime_error("malformed T3D1 file '" + path + "' at byte offset " +
                             std::to_string(offset) + ": " + what);
}

}  // namespace

void save_t3d1(const Tensor3& t, const std::string& path) {
    std::ofstream os(path, std::ios::binary);
    if (!os) throw std::runtime_error("cannot open '" + path + "' for writing");
    os.write(kMagic, 4);
    write_u64(os, static_cast<uint64_t>(t.rows()));
    write_u64(os, static_cast<uint64_t>(t.cols()));
    write_u64(os, static_cast<uint64_t>(t.tubes()));
    static_assert(sizeof(double) == 8);
    // doubles are written verbatim; this code assumes a little-endian host
    os.write(reinterpret_cast<const char*>(t.data()), t.size() * 8);
    if (!os) throw std::runtime_error("write failed for '" + path + "'");
}

Tensor3 load_t3d1(const std::string& path) {
    std::ifstream is(path, std::ios::binary);
    if (!is) throw std::runtime_error("cannot open '" + path + "'");
    char magic[4];
    is.read(magic, 4);
    if (!is || std::memcmp(magic, kMagic, 4) != 0) malformed(path, 0, "bad magic");
    const uint64_t l = read_u64(is), m = read_u64(is), n = read_u64(is);
    if (!is) malformed(path, 4, "truncated header");
    if (l == 0 || m == 0 || n == 0 || l * m * n > (1ull << 32))
        malformed(path, 4, "implausible dimensions " + std::to_string(l) + "x" +
                               std::to_string(m) + "x" + std::to_string(n));
    Tensor3 t(static_cast<Index>(l), static_cast<Index>(m), static_cast<Index>(n));
    is.read(reinterpret_cast<char*>(t.data()), t.size() * 8);
    if (!is) malformed(path, 28, "truncated payload");
    return t;
}

}  // namespace tla
