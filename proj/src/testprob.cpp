#include "tla/testprob.hpp"

#include <algorithm>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <numbers>
#include <sstream>

namespace tla {

namespace fs = std::filesystem;

namespace {

Eigen::MatrixXd symmetric_toeplitz(const Eigen::VectorXd& first_row) {
    const Index n = first_row.size();
    Eigen::MatrixXd a(n, n);
    for (Index i = 0; i < n; ++i)
        for (Index j = 0; j < n; ++j) a(i, j) = first_row(std::abs(i - j));
    return a;
}

void check_blur_spec(const BlurSpec& spec) {
    if (spec.n_size < 1) throw std::invalid_argument("blur: matrix order must be positive");
    if (spec.sigma <= 0.0) throw std::invalid_argument("blur: sigma must be positive");
    if (spec.band < 1 || spec.band > spec.n_size)
        throw std::invalid_argument("blur: band " + std::to_string(spec.band) +
                                    " out of range for order " + std::to_string(spec.n_size));
}

}  // namespace

Eigen::MatrixXd blur_matrix(const BlurSpec& spec) {
    check_blur_spec(spec);
    Eigen::VectorXd z = Eigen::VectorXd::Zero(spec.n_size);
    for (Index k = 0; k < spec.band; ++k)
        z(k) = std::exp(-static_cast<double>(k * k) / (2.0 * spec.sigma * spec.sigma));
    z /= spec.sigma * std::sqrt(2.0 * std::numbers::pi);
    return symmetric_toeplitz(z);
}

Tensor3 blur_tensor(const BlurSpec& spec) {
    const Eigen::MatrixXd a = blur_matrix(spec);
    Tensor3 t(spec.n_size, spec.n_size, spec.n_size);
    for (Index i = 0; i < spec.n_size; ++i) t.slice(i) = a(i, 0) * a;
    return t;
}

Tensor3 blur_tensor_symmetric(const BlurSpec& spec) {
    const Eigen::MatrixXd a = blur_matrix(spec);
    const Index n = spec.n_size;
    Tensor3 t(n, n, n);
    // Mirrored weights give a real, even weight sequence, so the spectral
    // slices are real multiples of the symmetric A, hence Hermitian.
    for (Index i = 0; i < n; ++i) t.slice(i) = a(std::min(i, n - i) % n, 0) * a;
    return t;
}

Tensor3 blur_tensor_symmetric(const BlurSpec& spec, const BlurSpec& tube_spec) {
    if (tube_spec.n_size != spec.n_size)
        throw std::invalid_argument("blur: tube spec order must match the matrix order");
    const Eigen::MatrixXd a = blur_matrix(spec);
    const Eigen::MatrixXd w = blur_matrix(tube_spec);
    const Index n = spec.n_size;
    Tensor3 t(n, n, n);
    // Tube weights normalized so slice 0 equals A; a mild tube kernel keeps
    // the cross-slice coupling well conditioned while the matrix kernel
    // carries the ill-posedness.
    for (Index i = 0; i < n; ++i)
        t.slice(i) = w(std::min(i, n - i) % n, 0) / w(0, 0) * a;
    return t;
}

Eigen::MatrixXd prolate_matrix(Index n, double w) {
    if (n < 1) throw std::invalid_argument("prolate: order must be positive");
    if (!(w > 0.0 && w < 0.5)) throw std::invalid_argument("prolate: need 0 < w < 0.5");
    Eigen::VectorXd row(n);
    row(0) = 2.0 * w;
    for (Index k = 1; k < n; ++k)
        row(k) = std::sin(2.0 * std::numbers::pi * w * k) / (std::numbers::pi * k);
    return symmetric_toeplitz(row);
}

Tensor3 prolate_slices(Index n, double w, const Eigen::MatrixXd& inner) {
    if (inner.rows() != n || inner.cols() != n)
        throw std::invalid_argument("prolate_slices: inner matrix is " +
                                    std::to_string(inner.rows()) + "x" +
                                    std::to_string(inner.cols()) + ", expected order " +
                                    std::to_string(n));
    const Eigen::MatrixXd a1 = prolate_matrix(n, w);
    Tensor3 t(n, n, n);
    for (Index i = 0; i < n; ++i) t.slice(i) = a1(i, 0) * inner;
    return t;
}

Eigen::MatrixXd load_matrix_fixture(const std::string& path) {
    Tensor3 t = load_t3d1(path);
    if (t.tubes() != 1)
        throw std::runtime_error("matrix fixture " + path + " has " + std::to_string(t.tubes()) +
                                 " frontal slices, expected 1");
    return t.slice(0);
}

ProblemInstance make_instance(const Tensor3& a, const Tensor3& x_true, const NoiseSpec& noise,
                              const std::string& tag) {
    if (noise.level < 0.0) throw std::invalid_argument("make_instance: negative noise level");
    if (a.cols() != x_true.rows() || a.tubes() != x_true.tubes())
        throw std::invalid_argument("make_instance: operator " + a.shape_str() +
                                    " incompatible with solution " + x_true.shape_str());
    ProblemInstance inst;
    inst.a = a;
    inst.x_true = x_true;
    inst.b_true = tprod(a, x_true);

    const double bnorm = fro_norm(inst.b_true);
    if (noise.level > 0.0 && bnorm == 0.0)
        throw std::invalid_argument("make_instance: zero b_true with positive noise level");

    inst.b = inst.b_true;
    Tensor3 e(inst.b.rows(), inst.b.cols(), inst.b.tubes());
    if (noise.level > 0.0) {
        std::mt19937_64 rng(noise.seed);
        e = Tensor3::random(inst.b.rows(), inst.b.cols(), inst.b.tubes(), rng);
        e *= noise.level * bnorm / fro_norm(e);
        inst.b += e;
    }
    inst.delta = fro_norm(e);
    inst.deltas.resize(inst.b.cols());
    for (Index j = 0; j < inst.b.cols(); ++j) inst.deltas[j] = fro_norm(e.lateral(j));

    std::ostringstream prov;
    prov << tag << " a=" << a.shape_str() << " x_true=" << x_true.shape_str()
         << " level=" << noise.level << " seed=" << noise.seed;
    inst.provenance = prov.str();
    return inst;
}

namespace {

// Portable anymap reader: P2/P5 graymaps and P3/P6 pixmaps, plain or raw,
// maxval up to 65535 (raw 16-bit samples are big-endian).
struct Pnm {
    Index rows = 0, cols = 0, channels = 0;
    std::vector<double> pixels;  // row-major, channel-interleaved, in [0,1]
};

int next_token_int(std::istream& in, const std::string& path) {
    for (;;) {
        const int c = in.peek();
        if (c == EOF) throw std::runtime_error("unexpected end of header in " + path);
        if (std::isspace(c)) {
            in.get();
        } else if (c == '#') {
            std::string line;
            std::getline(in, line);
        } else {
            break;
        }
    }
    int v = 0;
    if (!(in >> v)) throw std::runtime_error("malformed header token in " + path);
    return v;
}

Pnm read_pnm(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw std::runtime_error("cannot open image " + path);
    char p = 0, kind = 0;
    in.get(p);
    in.get(kind);
    if (p != 'P' || (kind != '2' && kind != '3' && kind != '5' && kind != '6'))
        throw std::runtime_error("unsupported image format in " + path +
                                 " (expected P2/P3/P5/P6)");
    const bool color = kind == '3' || kind == '6';
    const bool raw = kind == '5' || kind == '6';

    Pnm img;
    img.cols = next_token_int(in, path);
    img.rows = next_token_int(in, path);
    const int maxval = next_token_int(in, path);
    if (img.cols < 1 || img.rows < 1 || maxval < 1 || maxval > 65535)
        throw std::runtime_error("malformed image dimensions in " + path);
    img.channels = color ? 3 : 1;

    const size_t count = static_cast<size_t>(img.rows) * img.cols * img.channels;
    img.pixels.resize(count);
    if (raw) {
        in.get();  // single whitespace after maxval
        const int bytes = maxval < 256 ? 1 : 2;
        std::vector<unsigned char> buf(count * bytes);
        in.read(reinterpret_cast<char*>(buf.data()), static_cast<std::streamsize>(buf.size()));
        if (in.gcount() != static_cast<std::streamsize>(buf.size()))
            throw std::runtime_error("truncated raster in " + path);
        for (size_t i = 0; i < count; ++i) {
            const int v = bytes == 1 ? buf[i] : (buf[2 * i] << 8) | buf[2 * i + 1];
            img.pixels[i] = static_cast<double>(v) / maxval;
        }
    } else {
        for (size_t i = 0; i < count; ++i) {
            const int v = next_token_int(in, path);
            if (v < 0 || v > maxval) throw std::runtime_error("sample out of range in " + path);
            img.pixels[i] = static_cast<double>(v) / maxval;
        }
    }
    return img;
}

Tensor3 pnm_to_tensor(const Pnm& img) {
    Tensor3 t(img.rows, img.channels, img.cols);
    for (Index r = 0; r < img.rows; ++r)
        for (Index c = 0; c < img.cols; ++c)
            for (Index ch = 0; ch < img.channels; ++ch)
                t(r, ch, c) = img.pixels[(static_cast<size_t>(r) * img.cols + c) * img.channels + ch];
    return t;
}

unsigned char quantize(double v) {
    const double clamped = std::clamp(v, 0.0, 1.0);
    return static_cast<unsigned char>(std::lround(clamped * 255.0));
}

}  // namespace

Tensor3 image_to_tensor(const std::string& path) { return pnm_to_tensor(read_pnm(path)); }

LateralSlice image_to_slice(const std::string& path) {
    Tensor3 t = image_to_tensor(path);
    if (t.cols() != 1)
        throw std::runtime_error("image " + path + " has " + std::to_string(t.cols()) +
                                 " channels, expected grayscale");
    return t;
}

void tensor_to_image(const Tensor3& x, const std::string& path) {
    if (x.cols() != 1 && x.cols() != 3)
        throw std::invalid_argument("tensor_to_image: need 1 or 3 lateral slices, got " +
                                    std::to_string(x.cols()));
    std::ofstream out(path, std::ios::binary);
    if (!out) throw std::runtime_error("cannot write image " + path);
    const bool color = x.cols() == 3;
    out << (color ? "P6" : "P5") << "\n" << x.tubes() << " " << x.rows() << "\n255\n";
    for (Index r = 0; r < x.rows(); ++r)
        for (Index c = 0; c < x.tubes(); ++c)
            for (Index ch = 0; ch < x.cols(); ++ch) out.put(static_cast<char>(quantize(x(r, ch, c))));
    if (!out) throw std::runtime_error("write failed for " + path);
}

Tensor3 frames_to_tensor(const std::string& dir) {
    std::vector<fs::path> files;
    for (const auto& entry : fs::directory_iterator(dir))
        if (entry.is_regular_file() && entry.path().extension() == ".pgm")
            files.push_back(entry.path());
    if (files.empty()) throw std::runtime_error("no .pgm frames in " + dir);
    std::sort(files.begin(), files.end());

    Tensor3 out;
    for (size_t j = 0; j < files.size(); ++j) {
        LateralSlice frame = image_to_slice(files[j].string());
        if (j == 0)
            out = Tensor3(frame.rows(), static_cast<Index>(files.size()), frame.tubes());
        else if (frame.rows() != out.rows() || frame.tubes() != out.tubes())
            throw std::runtime_error("frame " + files[j].string() + " has shape " +
                                     frame.shape_str() + ", expected to match the first frame");
        out.set_lateral(static_cast<Index>(j), frame);
    }
    return out;
}

void tensor_to_frames(const Tensor3& x, const std::string& dir) {
    fs::create_directories(dir);
    for (Index j = 0; j < x.cols(); ++j) {
        char name[32];
        std::snprintf(name, sizeof(name), "frame_%04lld.pgm", static_cast<long long>(j));
        tensor_to_image(x.lateral(j), (fs::path(dir) / name).string());
    }
}

}  // namespace tla
