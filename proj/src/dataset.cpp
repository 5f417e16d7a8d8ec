#include "it2ml/dataset.hpp"

#include <algorithm>
#include <cctype>
#include <charconv>
#include <cmath>
#include <cstring>
#include <fstream>
#include <sstream>

#include "it2ml/errors.hpp"
#include "it2ml/rng.hpp"

namespace it2ml {

std::uint64_t fnv1a_bytes(const void* data, std::size_t size, std::uint64_t seed) {
    const auto* p = static_cast<const unsigned char*>(data);
    std::uint64_t h = seed;
    for (std::size_t i = 0; i < size; ++i) {
        h ^= p[i];
        h *= 0x100000001b3ULL;
    }
    return h;
}

namespace {

std::string lower(std::string s) {
    std::transform(s.begin(), s.end(), s.begin(),
                   [](unsigned char c) { return static_cast<char>(std::tolower(c)); });
    return s;
}

std::string_view trim(std::string_view s) {
    while (!s.empty() && std::isspace(static_cast<unsigned char>(s.front()))) s.remove_prefix(1);
    while (!s.empty() && std::isspace(static_cast<unsigned char>(s.back()))) s.remove_suffix(1);
    return s;
}

double parse_double(std::string_view tok, const std::string& path, std::size_t line) {
    const std::string_view t = trim(tok);
    if (t.empty()) throw ParseError(path, line, "empty value");
    double v = 0;
    const auto res = std::from_chars(t.data(), t.data() + t.size(), v);
    if (res.ec != std::errc{} || res.ptr != t.data() + t.size())
        throw ParseError(path, line, "not a number: '" + std::string(t) + "'");
    if (!std::isfinite(v)) throw ParseError(path, line, "non-finite value");
    return v;
}

std::uint8_t parse_binary_label(double v, const std::string& path, std::size_t line) {
    if (v == 0.0) return 0;
    if (v == 1.0) return 1;
    throw ParseError(path, line, "label value must be 0 or 1");
}

// Attribute name, possibly quoted with ' or ".
std::string_view take_name(std::string_view& rest, const std::string& path, std::size_t line) {
    rest = trim(rest);
    if (rest.empty()) throw ParseError(path, line, "missing attribute name");
    if (rest.front() == '\'' || rest.front() == '"') {
        const char q = rest.front();
        const auto end = rest.find(q, 1);
        if (end == std::string_view::npos) throw ParseError(path, line, "unterminated quote");
        std::string_view name = rest.substr(1, end - 1);
        rest.remove_prefix(end + 1);
        return name;
    }
    std::size_t end = 0;
    while (end < rest.size() && !std::isspace(static_cast<unsigned char>(rest[end]))) ++end;
    std::string_view name = rest.substr(0, end);
    rest.remove_prefix(end);
    return name;
}

struct ArffAttr {
    std::string name;
    bool nominal01 = false;  // declared as {0,1}
    bool numeric = false;
};

std::vector<std::string_view> split_csv(std::string_view s) {
    std::vector<std::string_view> out;
    std::size_t start = 0;
    for (std::size_t i = 0; i <= s.size(); ++i) {
        if (i == s.size() || s[i] == ',') {
            out.push_back(s.substr(start, i - start));
            start = i + 1;
        }
    }
    return out;
}

}  // namespace

Dataset parse_arff(const std::string& path, const LabelSpec& labels) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw IoError("cannot open " + path);

    std::string relation;
    std::vector<ArffAttr> attrs;
    bool in_data = false;
    std::vector<std::vector<double>> raw_rows;
    std::vector<std::size_t> row_lines;
    std::string line;
    std::size_t lineno = 0;

    while (std::getline(in, line)) {
        ++lineno;
        if (!line.empty() && line.back() == '\r') line.pop_back();
        std::string_view sv = trim(line);
        if (sv.empty() || sv.front() == '%') continue;

        if (!in_data && sv.front() == '@') {
            const auto sp = sv.find_first_of(" \t");
            const std::string key = lower(std::string(sv.substr(0, sp)));
            std::string_view rest = sp == std::string_view::npos ? std::string_view{} : sv.substr(sp);
            if (key == "@relation") {
                relation = std::string(trim(rest));
            } else if (key == "@attribute") {
                ArffAttr attr;
                attr.name = std::string(take_name(rest, path, lineno));
                const std::string type = lower(std::string(trim(rest)));
                if (type == "numeric" || type == "real" || type == "integer") {
                    attr.numeric = true;
                } else if (!type.empty() && type.front() == '{') {
                    const auto close = type.find('}');
                    if (close == std::string::npos)
                        throw ParseError(path, lineno, "unterminated nominal list");
                    std::string inner = type.substr(1, close - 1);
                    inner.erase(std::remove_if(inner.begin(), inner.end(), ::isspace), inner.end());
                    if (inner == "0,1" || inner == "1,0") {
                        attr.nominal01 = true;
                    } else {
                        throw ParseError(path, lineno,
                                         "unsupported nominal domain for '" + attr.name + "'");
                    }
                } else {
                    throw ParseError(path, lineno, "unsupported attribute type '" + type + "'");
                }
                attrs.push_back(std::move(attr));
            } else if (key == "@data") {
                if (attrs.empty()) throw ParseError(path, lineno, "@data before any @attribute");
                in_data = true;
            } else {
                throw ParseError(path, lineno, "unknown declaration '" + key + "'");
            }
            continue;
        }

        if (!in_data) throw ParseError(path, lineno, "instance data before @data");

        std::vector<double> row(attrs.size(), 0.0);
        if (sv.front() == '{') {
            // sparse instance: {index value, index value, ...}
            if (sv.back() != '}') throw ParseError(path, lineno, "unterminated sparse instance");
            const std::string_view body = trim(sv.substr(1, sv.size() - 2));
            if (!body.empty()) {
                for (std::string_view pair : split_csv(body)) {
                    pair = trim(pair);
                    const auto sp2 = pair.find_first_of(" \t");
                    if (sp2 == std::string_view::npos)
                        throw ParseError(path, lineno, "sparse entry needs 'index value'");
                    std::size_t idx = 0;
                    const std::string_view idx_tok = trim(pair.substr(0, sp2));
                    const auto res =
                        std::from_chars(idx_tok.data(), idx_tok.data() + idx_tok.size(), idx);
                    if (res.ec != std::errc{} || res.ptr != idx_tok.data() + idx_tok.size())
                        throw ParseError(path, lineno, "bad sparse index");
                    if (idx >= attrs.size())
                        throw ParseError(path, lineno, "sparse index out of range");
                    row[idx] = parse_double(pair.substr(sp2), path, lineno);
                }
            }
        } else {
            const auto toks = split_csv(sv);
            if (toks.size() != attrs.size())
                throw ParseError(path, lineno,
                                 "expected " + std::to_string(attrs.size()) + " values, got " +
                                     std::to_string(toks.size()));
            for (std::size_t j = 0; j < toks.size(); ++j) {
                row[j] = parse_double(toks[j], path, lineno);
            }
        }
        raw_rows.push_back(std::move(row));
        row_lines.push_back(lineno);
    }
    if (!in_data) throw ParseError(path, lineno, "no @data section");

    // Locate label columns.
    std::vector<bool> is_label(attrs.size(), false);
    if (!labels.names.empty()) {
        for (const auto& want : labels.names) {
            const auto it = std::find_if(attrs.begin(), attrs.end(),
                                         [&](const ArffAttr& a) { return a.name == want; });
            if (it == attrs.end())
                throw ParseError(path, 0, "label attribute '" + want + "' not found");
            is_label[static_cast<std::size_t>(it - attrs.begin())] = true;
        }
    } else {
        if (labels.trailing_count == 0 || labels.trailing_count >= attrs.size())
            throw InputError("label spec must name labels or give a valid trailing count");
        for (std::size_t j = attrs.size() - labels.trailing_count; j < attrs.size(); ++j)
            is_label[j] = true;
    }

    Dataset ds;
    ds.name = relation.empty() ? path : relation;
    const std::size_t L = static_cast<std::size_t>(
        std::count(is_label.begin(), is_label.end(), true));
    const std::size_t d = attrs.size() - L;
    ds.X = Matrix(raw_rows.size(), d);
    ds.Y = LabelMatrix(raw_rows.size(), L);
    for (std::size_t j = 0; j < attrs.size(); ++j) {
        (is_label[j] ? ds.label_names : ds.feature_names).push_back(attrs[j].name);
    }
    for (std::size_t i = 0; i < raw_rows.size(); ++i) {
        std::size_t fj = 0, lj = 0;
        for (std::size_t j = 0; j < attrs.size(); ++j) {
            if (is_label[j]) {
                // sparse rows default to 0, which is a valid label value
                ds.Y(i, lj++) = parse_binary_label(raw_rows[i][j], path, row_lines[i]);
            } else {
                ds.X(i, fj++) = raw_rows[i][j];
            }
        }
    }

    std::ifstream hash_in(path, std::ios::binary);
    std::stringstream buf;
    buf << hash_in.rdbuf();
    const std::string bytes = buf.str();
    ds.provenance.paths = {path};
    ds.provenance.content_hash = fnv1a_bytes(bytes.data(), bytes.size());
    return ds;
}

Dataset parse_csv(const std::string& features_path, const std::string& labels_path,
                  const std::string& name) {
    auto read_rows = [](const std::string& path) {
        std::ifstream in(path, std::ios::binary);
        if (!in) throw IoError("cannot open " + path);
        std::vector<std::vector<double>> rows;
        std::string line;
        std::size_t lineno = 0;
        while (std::getline(in, line)) {
            ++lineno;
            if (!line.empty() && line.back() == '\r') line.pop_back();
            const std::string_view sv = trim(line);
            if (sv.empty()) continue;
            std::vector<double> row;
            // accept comma- or whitespace-separated cells
            if (sv.find(',') != std::string_view::npos) {
                for (const auto tok : split_csv(sv)) row.push_back(parse_double(tok, path, lineno));
            } else {
                std::istringstream ss{std::string(sv)};
                std::string tok;
                while (ss >> tok) row.push_back(parse_double(tok, path, lineno));
            }
            if (!rows.empty() && row.size() != rows.front().size())
                throw ParseError(path, lineno, "inconsistent column count");
            rows.push_back(std::move(row));
        }
        return rows;
    };

    const auto fx = read_rows(features_path);
    const auto fy = read_rows(labels_path);
    if (fx.size() != fy.size())
        throw ParseError(labels_path, 0,
                         "row-count mismatch: " + std::to_string(fx.size()) + " feature rows vs " +
                             std::to_string(fy.size()) + " label rows");
    if (fx.empty()) throw InputError("empty dataset");

    Dataset ds;
    ds.name = name.empty() ? features_path : name;
    ds.X = Matrix(fx.size(), fx.front().size());
    ds.Y = LabelMatrix(fy.size(), fy.front().size());
    for (std::size_t i = 0; i < fx.size(); ++i) {
        std::copy(fx[i].begin(), fx[i].end(), ds.X.row_ptr(i));
        for (std::size_t j = 0; j < fy[i].size(); ++j) {
            if (fy[i][j] != 0.0 && fy[i][j] != 1.0)
                throw ParseError(labels_path, i + 1, "label value must be 0 or 1");
            ds.Y(i, j) = static_cast<std::uint8_t>(fy[i][j]);
        }
    }
    for (std::size_t j = 0; j < ds.X.cols; ++j) ds.feature_names.push_back("f" + std::to_string(j));
    for (std::size_t j = 0; j < ds.Y.cols; ++j) ds.label_names.push_back("l" + std::to_string(j));

    for (const auto& p : {features_path, labels_path}) {
        std::ifstream hin(p, std::ios::binary);
        std::stringstream buf;
        buf << hin.rdbuf();
        const std::string bytes = buf.str();
        ds.provenance.content_hash = fnv1a_bytes(bytes.data(), bytes.size(),
                                                 ds.provenance.content_hash
                                                     ? ds.provenance.content_hash
                                                     : 0xcbf29ce484222325ULL);
        ds.provenance.paths.push_back(p);
    }
    return ds;
}

Dataset subset(const Dataset& ds, std::span<const std::size_t> indices, const std::string& name) {
    Dataset out;
    out.name = name;
    out.feature_names = ds.feature_names;
    out.label_names = ds.label_names;
    out.provenance = ds.provenance;
    out.X = Matrix(indices.size(), ds.X.cols);
    out.Y = LabelMatrix(indices.size(), ds.Y.cols);
    for (std::size_t i = 0; i < indices.size(); ++i) {
        if (indices[i] >= ds.size()) throw InputError("subset index out of range");
        std::copy_n(ds.X.row_ptr(indices[i]), ds.X.cols, out.X.row_ptr(i));
        for (std::size_t j = 0; j < ds.Y.cols; ++j) out.Y(i, j) = ds.Y(indices[i], j);
    }
    return out;
}

namespace {

std::vector<std::size_t> read_index_file(const std::string& path, std::size_t n) {
    std::ifstream in(path);
    if (!in) throw InputError("missing original split index file: " + path);
    std::vector<std::size_t> idx;
    std::string line;
    std::size_t lineno = 0;
    while (std::getline(in, line)) {
        ++lineno;
        const std::string_view sv = trim(line);
        if (sv.empty()) continue;
        std::size_t v = 0;
        const auto res = std::from_chars(sv.data(), sv.data() + sv.size(), v);
        if (res.ec != std::errc{} || res.ptr != sv.data() + sv.size())
            throw ParseError(path, lineno, "bad index");
        if (v >= n) throw ParseError(path, lineno, "index out of range");
        idx.push_back(v);
    }
    return idx;
}

}  // namespace

Split split(const Dataset& ds, const SplitSpec& spec) {
    if (spec.mode == SplitSpec::Mode::original) {
        const auto tr = read_index_file(spec.train_index_path, ds.size());
        const auto va = read_index_file(spec.val_index_path, ds.size());
        const auto te = read_index_file(spec.test_index_path, ds.size());
        return {subset(ds, tr, ds.name + "-train"), subset(ds, va, ds.name + "-val"),
                subset(ds, te, ds.name + "-test")};
    }

    const double total = spec.train_fraction + spec.val_fraction + spec.test_fraction;
    if (spec.train_fraction < 0 || spec.val_fraction < 0 || spec.test_fraction < 0 ||
        std::fabs(total - 1.0) > 1e-9)
        throw InputError("split fractions must be nonnegative and sum to 1");

    std::vector<std::size_t> order(ds.size());
    for (std::size_t i = 0; i < order.size(); ++i) order[i] = i;
    Rng rng(spec.seed);
    rng.shuffle(order);

    const auto n = static_cast<double>(ds.size());
    std::size_t n_train = static_cast<std::size_t>(std::llround(spec.train_fraction * n));
    std::size_t n_val = static_cast<std::size_t>(std::llround(spec.val_fraction * n));
    n_train = std::min(n_train, ds.size());
    n_val = std::min(n_val, ds.size() - n_train);

    const std::span<const std::size_t> all(order);
    return {subset(ds, all.subspan(0, n_train), ds.name + "-train"),
            subset(ds, all.subspan(n_train, n_val), ds.name + "-val"),
            subset(ds, all.subspan(n_train + n_val), ds.name + "-test")};
}

void Scaler::apply(Matrix& x) const {
    if (x.cols != mean.size()) throw ShapeError("scaler dimension mismatch");
    for (std::size_t i = 0; i < x.rows; ++i) {
        double* row = x.row_ptr(i);
        for (std::size_t j = 0; j < x.cols; ++j) {
            row[j] = stddev[j] > 0.0 ? (row[j] - mean[j]) / stddev[j] : 0.0;
        }
    }
}

Scaler fit_scaler(const Matrix& train_x) {
    if (train_x.rows == 0) throw InputError("cannot fit scaler on empty split");
    Scaler s;
    s.mean.assign(train_x.cols, 0.0);
    s.stddev.assign(train_x.cols, 0.0);
    const double inv_n = 1.0 / static_cast<double>(train_x.rows);
    for (std::size_t i = 0; i < train_x.rows; ++i) {
        const double* row = train_x.row_ptr(i);
        for (std::size_t j = 0; j < train_x.cols; ++j) s.mean[j] += row[j];
    }
    for (auto& m : s.mean) m *= inv_n;
    for (std::size_t i = 0; i < train_x.rows; ++i) {
        const double* row = train_x.row_ptr(i);
        for (std::size_t j = 0; j < train_x.cols; ++j) {
            const double dv = row[j] - s.mean[j];
            s.stddev[j] += dv * dv;
        }
    }
    for (auto& v : s.stddev) v = std::sqrt(v * inv_n);
    return s;
}

Scaler normalize(Dataset& train, const std::vector<Dataset*>& others) {
    Scaler s = fit_scaler(train.X);
    s.apply(train.X);
    for (Dataset* d : others) {
        if (d) s.apply(d->X);
    }
    return s;
}

DatasetStats stats(const Dataset& ds) {
    DatasetStats st;
    st.n_samples = ds.size();
    st.n_labels = ds.label_count();
    st.feature_dim = ds.feature_dim();
    std::size_t total = 0;
    for (std::size_t i = 0; i < ds.size(); ++i) total += ds.Y.cardinality(i);
    if (ds.size() > 0)
        st.mean_labels_per_sample = static_cast<double>(total) / static_cast<double>(ds.size());
    if (ds.label_count() > 0)
        st.mean_samples_per_label = static_cast<double>(total) / static_cast<double>(ds.label_count());
    return st;
}

void validate_stats(const Dataset& ds, const ExpectedStats& expect) {
    const DatasetStats st = stats(ds);
    auto fail = [&](const std::string& what) {
        throw InputError("dataset '" + ds.name + "' failed validation: " + what);
    };
    if (expect.n_samples && st.n_samples != *expect.n_samples)
        fail("n_samples " + std::to_string(st.n_samples) + " != " +
             std::to_string(*expect.n_samples));
    if (expect.n_labels && st.n_labels != *expect.n_labels)
        fail("n_labels " + std::to_string(st.n_labels) + " != " + std::to_string(*expect.n_labels));
    if (expect.feature_dim && st.feature_dim != *expect.feature_dim)
        fail("feature_dim " + std::to_string(st.feature_dim) + " != " +
             std::to_string(*expect.feature_dim));
    if (expect.mean_labels_per_sample &&
        std::fabs(st.mean_labels_per_sample - *expect.mean_labels_per_sample) > expect.tolerance)
        fail("mean labels per sample " + std::to_string(st.mean_labels_per_sample) +
             " not within " + std::to_string(expect.tolerance) + " of " +
             std::to_string(*expect.mean_labels_per_sample));
}

namespace {

constexpr char kCacheMagic[8] = {'I', 'T', '2', 'M', 'L', 'C', '0', '1'};

template <typename T>
void put(std::string& out, const T& v) {
    out.append(reinterpret_cast<const char*>(&v), sizeof(T));
}

void put_str(std::string& out, const std::string& s) {
    put(out, static_cast<std::uint64_t>(s.size()));
    out.append(s);
}

struct Reader {
    const std::string& buf;
    std::size_t pos = 0;

    template <typename T>
    T get() {
        if (pos + sizeof(T) > buf.size()) throw IoError("cache truncated");
        T v;
        std::memcpy(&v, buf.data() + pos, sizeof(T));
        pos += sizeof(T);
        return v;
    }
    std::string get_str() {
        const auto n = get<std::uint64_t>();
        if (pos + n > buf.size()) throw IoError("cache truncated");
        std::string s = buf.substr(pos, n);
        pos += n;
        return s;
    }
};

}  // namespace

void save_cache(const Dataset& ds, const std::string& path) {
    std::string out;
    out.append(kCacheMagic, sizeof(kCacheMagic));
    put_str(out, ds.name);
    put(out, static_cast<std::uint64_t>(ds.X.rows));
    put(out, static_cast<std::uint64_t>(ds.X.cols));
    put(out, static_cast<std::uint64_t>(ds.Y.cols));
    out.append(reinterpret_cast<const char*>(ds.X.data.data()),
               ds.X.data.size() * sizeof(double));
    out.append(reinterpret_cast<const char*>(ds.Y.data.data()), ds.Y.data.size());
    put(out, static_cast<std::uint64_t>(ds.feature_names.size()));
    for (const auto& s : ds.feature_names) put_str(out, s);
    put(out, static_cast<std::uint64_t>(ds.label_names.size()));
    for (const auto& s : ds.label_names) put_str(out, s);
    put(out, ds.provenance.content_hash);

    const std::uint64_t checksum = fnv1a_bytes(out.data(), out.size());
    put(out, checksum);

    std::ofstream f(path, std::ios::binary | std::ios::trunc);
    if (!f) throw IoError("cannot write " + path);
    f.write(out.data(), static_cast<std::streamsize>(out.size()));
}

Dataset load_cache(const std::string& path) {
    std::ifstream f(path, std::ios::binary);
    if (!f) throw IoError("cannot open " + path);
    std::stringstream ss;
    ss << f.rdbuf();
    const std::string buf = ss.str();
    if (buf.size() < sizeof(kCacheMagic) + sizeof(std::uint64_t)) throw IoError("cache truncated");
    if (std::memcmp(buf.data(), kCacheMagic, sizeof(kCacheMagic)) != 0)
        throw IoError("bad cache magic");

    std::uint64_t stored = 0;
    std::memcpy(&stored, buf.data() + buf.size() - sizeof(stored), sizeof(stored));
    if (fnv1a_bytes(buf.data(), buf.size() - sizeof(stored)) != stored)
        throw IoError("cache checksum mismatch");

    Reader r{buf, sizeof(kCacheMagic)};
    Dataset ds;
    ds.name = r.get_str();
    const auto rows = r.get<std::uint64_t>();
    const auto cols = r.get<std::uint64_t>();
    const auto L = r.get<std::uint64_t>();
    ds.X = Matrix(rows, cols);
    if (r.pos + rows * cols * sizeof(double) > buf.size()) throw IoError("cache truncated");
    std::memcpy(ds.X.data.data(), buf.data() + r.pos, rows * cols * sizeof(double));
    r.pos += rows * cols * sizeof(double);
    ds.Y = LabelMatrix(rows, L);
    if (r.pos + rows * L > buf.size()) throw IoError("cache truncated");
    std::memcpy(ds.Y.data.data(), buf.data() + r.pos, rows * L);
    r.pos += rows * L;
    const auto nf = r.get<std::uint64_t>();
    for (std::uint64_t i = 0; i < nf; ++i) ds.feature_names.push_back(r.get_str());
    const auto nl = r.get<std::uint64_t>();
    for (std::uint64_t i = 0; i < nl; ++i) ds.label_names.push_back(r.get_str());
    ds.provenance.content_hash = r.get<std::uint64_t>();
    ds.provenance.paths = {path};
    return ds;
}

}  // namespace it2ml
