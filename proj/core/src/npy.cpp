#include "zsclust/npy.hpp"

#include <algorithm>
#include <bit>
#include <cctype>
#include <cstring>
#include <fstream>
#include <iterator>
#include <sstream>

#include "zsclust/errors.hpp"

namespace zsclust::npy {
namespace {

constexpr char kMagic[] = "\x93NUMPY";
constexpr std::size_t kMagicLen = 6;
constexpr std::size_t kAlign = 64;
constexpr std::size_t kGrowthAxisDigits = 21;

template <typename T>
T from_little(T v) {
    if constexpr (std::endian::native == std::endian::little) {
        return v;
    } else {
        unsigned char b[sizeof(T)];
        std::memcpy(b, &v, sizeof(T));
        std::reverse(b, b + sizeof(T));
        std::memcpy(&v, b, sizeof(T));
        return v;
    }
}

std::string descr_of(DType t) { return t == DType::Float32 ? "<f4" : "<i8"; }

std::size_t element_size(DType t) { return t == DType::Float32 ? 4 : 8; }

// Minimal parser for the python-literal dict numpy writes.
class DictParser {
public:
    explicit DictParser(std::string_view s) : s_(s) {}

    Header parse() {
        Header h;
        bool have_descr = false, have_order = false, have_shape = false;
        expect('{');
        while (true) {
            skip_ws();
            if (peek() == '}') break;
            const std::string key = parse_string();
            expect(':');
            if (key == "descr") {
                const std::string d = parse_string();
                if (d == "<f4") {
                    h.dtype = DType::Float32;
                } else if (d == "<i8") {
                    h.dtype = DType::Int64;
                } else {
                    throw FormatError("npy: unsupported dtype '" + d + "' (expected <f4 or <i8)");
                }
                have_descr = true;
            } else if (key == "fortran_order") {
                skip_ws();
                if (s_.substr(pos_, 5) == "False") {
                    pos_ += 5;
                } else if (s_.substr(pos_, 4) == "True") {
                    throw FormatError("npy: fortran_order arrays are not supported");
                } else {
                    throw FormatError("npy: bad fortran_order value");
                }
                have_order = true;
            } else if (key == "shape") {
                h.shape = parse_shape();
                have_shape = true;
            } else {
                throw FormatError("npy: unexpected header key '" + key + "'");
            }
            skip_ws();
            if (peek() == ',') {
                ++pos_;
                continue;
            }
            skip_ws();
            if (peek() != '}') throw FormatError("npy: malformed header dict");
        }
        if (!have_descr || !have_order || !have_shape) {
            throw FormatError("npy: header is missing descr, fortran_order or shape");
        }
        return h;
    }

private:
    char peek() const {
        if (pos_ >= s_.size()) throw FormatError("npy: truncated header dict");
        return s_[pos_];
    }
    void skip_ws() {
        while (pos_ < s_.size() && std::isspace(static_cast<unsigned char>(s_[pos_]))) ++pos_;
    }
    void expect(char c) {
        skip_ws();
        if (peek() != c) throw FormatError(std::string("npy: expected '") + c + "' in header");
        ++pos_;
    }
    std::string parse_string() {
        skip_ws();
        const char q = peek();
        if (q != '\'' && q != '"') throw FormatError("npy: expected quoted string in header");
        const auto end = s_.find(q, pos_ + 1);
        if (end == std::string_view::npos) throw FormatError("npy: unterminated string in header");
        std::string out(s_.substr(pos_ + 1, end - pos_ - 1));
        pos_ = end + 1;
        return out;
    }
    std::vector<std::size_t> parse_shape() {
        expect('(');
        std::vector<std::size_t> dims;
        while (true) {
            skip_ws();
            if (peek() == ')') {
                ++pos_;
                break;
            }
            if (!std::isdigit(static_cast<unsigned char>(peek()))) {
                throw FormatError("npy: bad shape tuple");
            }
            std::size_t v = 0;
            while (pos_ < s_.size() && std::isdigit(static_cast<unsigned char>(s_[pos_]))) {
                v = v * 10 + static_cast<std::size_t>(s_[pos_] - '0');
                ++pos_;
            }
            dims.push_back(v);
            skip_ws();
            if (peek() == ',') ++pos_;
        }
        return dims;
    }

    std::string_view s_;
    std::size_t pos_ = 0;
};

std::vector<char> slurp(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw IoError("cannot open '" + path.string() + "' for reading");
    return {std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
}

void write_bytes(const std::filesystem::path& path, const std::string& header, const void* data,
                 std::size_t nbytes) {
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) throw IoError("cannot open '" + path.string() + "' for writing");
    out.write(header.data(), static_cast<std::streamsize>(header.size()));
    out.write(static_cast<const char*>(data), static_cast<std::streamsize>(nbytes));
    if (!out) throw IoError("write to '" + path.string() + "' failed");
}

std::size_t element_count(std::span<const std::size_t> shape) {
    std::size_t n = 1;
    for (auto d : shape) n *= d;
    return n;
}

template <typename T>
void write_typed(const std::filesystem::path& path, DType dtype,
                 std::span<const std::size_t> shape, std::span<const T> data) {
    if (element_count(shape) != data.size()) {
        throw ValidationError("npy: shape does not match data length");
    }
    const std::string header = encode_header({dtype, {shape.begin(), shape.end()}});
    if constexpr (std::endian::native == std::endian::little) {
        write_bytes(path, header, data.data(), data.size_bytes());
    } else {
        std::vector<T> le(data.begin(), data.end());
        for (auto& v : le) v = from_little(v);
        write_bytes(path, header, le.data(), le.size() * sizeof(T));
    }
}

}  // namespace

std::string encode_header(const Header& header) {
    std::ostringstream dict;
    dict << "{'descr': '" << descr_of(header.dtype) << "', 'fortran_order': False, 'shape': (";
    for (std::size_t i = 0; i < header.shape.size(); ++i) {
        dict << header.shape[i];
        if (header.shape.size() == 1 || i + 1 < header.shape.size()) dict << ",";
        if (i + 1 < header.shape.size()) dict << " ";
    }
    dict << "), }";
    std::string body = dict.str();
    // numpy leaves room for the leading axis to grow to 21 digits in place.
    if (!header.shape.empty()) {
        const std::size_t digits = std::to_string(header.shape.front()).size();
        if (digits < kGrowthAxisDigits) body.append(kGrowthAxisDigits - digits, ' ');
    }
    const std::size_t preamble = kMagicLen + 2 + 2;
    const std::size_t unpadded = preamble + body.size() + 1;
    const std::size_t total = (unpadded + kAlign - 1) / kAlign * kAlign;
    body.append(total - unpadded, ' ');
    body.push_back('\n');
    if (body.size() > 0xFFFF) throw FormatError("npy: header too long for version 1.0");

    std::string out(kMagic, kMagicLen);
    out.push_back('\x01');
    out.push_back('\x00');
    const auto len = static_cast<std::uint16_t>(body.size());
    out.push_back(static_cast<char>(len & 0xFF));
    out.push_back(static_cast<char>(len >> 8));
    out += body;
    return out;
}

Header decode_header(std::span<const char> bytes, std::size_t& header_bytes) {
    if (bytes.size() < kMagicLen + 4 || std::memcmp(bytes.data(), kMagic, kMagicLen) != 0) {
        throw FormatError("npy: bad magic string");
    }
    const auto major = static_cast<unsigned char>(bytes[6]);
    std::size_t len = 0;
    std::size_t offset = 0;
    const auto byte = [&](std::size_t i) { return static_cast<std::size_t>(static_cast<unsigned char>(bytes[i])); };
    if (major == 1) {
        len = byte(8) | (byte(9) << 8);
        offset = 10;
    } else if (major == 2 || major == 3) {
        if (bytes.size() < 12) throw FormatError("npy: truncated preamble");
        len = byte(8) | (byte(9) << 8) | (byte(10) << 16) | (byte(11) << 24);
        offset = 12;
    } else {
        throw FormatError("npy: unsupported format version " + std::to_string(major));
    }
    if (bytes.size() < offset + len) throw FormatError("npy: truncated header");
    const std::string_view dict(bytes.data() + offset, len);
    Header h = DictParser(dict).parse();
    header_bytes = offset + len;
    return h;
}

RawArray read(const std::filesystem::path& path) {
    const std::vector<char> bytes = slurp(path);
    std::size_t header_bytes = 0;
    RawArray raw;
    raw.header = decode_header(bytes, header_bytes);
    const std::size_t count = element_count(raw.header.shape);
    const std::size_t need = count * element_size(raw.header.dtype);
    const std::size_t have = bytes.size() - header_bytes;
    if (have != need) {
        throw FormatError("npy: '" + path.string() + "' header declares " + std::to_string(need) +
                          " data bytes but file holds " + std::to_string(have));
    }
    const char* payload = bytes.data() + header_bytes;
    if (raw.header.dtype == DType::Float32) {
        raw.f32.resize(count);
        std::memcpy(raw.f32.data(), payload, need);
        for (auto& v : raw.f32) v = from_little(v);
    } else {
        raw.i64.resize(count);
        std::memcpy(raw.i64.data(), payload, need);
        for (auto& v : raw.i64) v = from_little(v);
    }
    return raw;
}

void write(const std::filesystem::path& path, std::span<const std::size_t> shape,
           std::span<const float> data) {
    write_typed(path, DType::Float32, shape, data);
}

void write(const std::filesystem::path& path, std::span<const std::size_t> shape,
           std::span<const std::int64_t> data) {
    write_typed(path, DType::Int64, shape, data);
}

}  // namespace zsclust::npy
