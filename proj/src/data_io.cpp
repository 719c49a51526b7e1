#include "gipal/data_io.hpp"

#include <algorithm>
#include <bit>
#include <cmath>
#include <cstdint>
#include <cstring>
#include <fstream>
#include <map>
#include <sstream>

#include "gipal/errors.hpp"
#include "gipal/text.hpp"

namespace gipal {

namespace {

constexpr const char* kModelMagic = "GIPAL1";

std::string read_binary_file(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw IoError("cannot open " + path);
    std::ostringstream buf;
    buf << in.rdbuf();
    if (in.bad()) throw IoError("read failure on " + path);
    return std::move(buf).str();
}

void write_binary_file(const std::string& path, const std::string& bytes) {
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) throw IoError("cannot open " + path + " for writing");
    out.write(bytes.data(), static_cast<std::streamsize>(bytes.size()));
    out.flush();
    if (!out) throw IoError("write failure on " + path);
}

void append_le_f32(std::string& out, const std::vector<float>& vals) {
    for (float v : vals) {
        std::uint32_t bits = std::bit_cast<std::uint32_t>(v);
        char b[4] = {static_cast<char>(bits & 0xFF), static_cast<char>((bits >> 8) & 0xFF),
                     static_cast<char>((bits >> 16) & 0xFF), static_cast<char>((bits >> 24) & 0xFF)};
        out.append(b, 4);
    }
}

float read_le_f32(const char* p) {
    const auto* u = reinterpret_cast<const unsigned char*>(p);
    std::uint32_t bits = static_cast<std::uint32_t>(u[0]) | (static_cast<std::uint32_t>(u[1]) << 8) |
                         (static_cast<std::uint32_t>(u[2]) << 16) |
                         (static_cast<std::uint32_t>(u[3]) << 24);
    return std::bit_cast<float>(bits);
}

// Cursor over the text header of a model file; tracks byte offsets for errors.
struct LineCursor {
    const std::string& bytes;
    std::size_t pos = 0;       // start of the next line
    std::size_t line_start = 0; // start of the line most recently read

    bool next(std::string_view& line) {
        if (pos >= bytes.size()) return false;
        line_start = pos;
        std::size_t nl = bytes.find('\n', pos);
        if (nl == std::string::npos) {
            line = std::string_view(bytes).substr(pos);
            pos = bytes.size();
        } else {
            line = std::string_view(bytes).substr(pos, nl - pos);
            pos = nl + 1;
        }
        return true;
    }

    [[noreturn]] void fail(const std::string& what) const {
        throw ParseError(what + " at byte offset " + std::to_string(line_start));
    }
};

long long field_int(LineCursor& cur, const std::vector<std::string_view>& tok, std::size_t i) {
    if (i >= tok.size()) cur.fail("missing field");
    try {
        return parse_int(tok[i]);
    } catch (const ParseError&) {
        cur.fail("expected integer, got '" + std::string(tok[i]) + "'");
    }
}

std::uint32_t read_be_u32(const std::string& bytes, std::size_t off, const std::string& path) {
    if (off + 4 > bytes.size())
        throw LengthError(path + ": truncated, need 4 bytes at offset " + std::to_string(off) +
                          ", have " + std::to_string(bytes.size() - off));
    const auto* u = reinterpret_cast<const unsigned char*>(bytes.data()) + off;
    return (static_cast<std::uint32_t>(u[0]) << 24) | (static_cast<std::uint32_t>(u[1]) << 16) |
           (static_cast<std::uint32_t>(u[2]) << 8) | static_cast<std::uint32_t>(u[3]);
}

} // namespace

void save_model(const Network& net, const std::string& path) {
    net.validate();
    std::string out;
    out += kModelMagic;
    out += '\n';
    out += "num_classes " + format_int(net.num_classes) + '\n';
    out += "input_shape";
    for (int d : net.input_shape) out += ' ' + format_int(d);
    out += '\n';
    out += "layers " + format_int(net.layer_count()) + '\n';
    std::size_t total_params = 0;
    for (const LayerSpec& l : net.layers) {
        out += "layer ";
        out += layer_kind_name(l.kind);
        if (l.kind == LayerKind::dense)
            out += " in " + format_int(l.in_dim) + " out " + format_int(l.out_dim);
        else if (l.kind == LayerKind::conv2d)
            out += " in_ch " + format_int(l.in_ch) + " out_ch " + format_int(l.out_ch) + " kh " +
                   format_int(l.kh) + " kw " + format_int(l.kw) + " stride " + format_int(l.stride);
        out += '\n';
        total_params += l.param_count();
    }
    out += "blob " + format_int(static_cast<long long>(total_params)) + '\n';
    for (const LayerSpec& l : net.layers) {
        append_le_f32(out, l.weights);
        append_le_f32(out, l.bias);
    }
    write_binary_file(path, out);
}

Network load_model(const std::string& path) {
    const std::string bytes = read_binary_file(path);
    LineCursor cur{bytes};
    std::string_view line;

    if (!cur.next(line) || line != kModelMagic) cur.fail("bad magic, expected GIPAL1");

    Network net;
    if (!cur.next(line)) cur.fail("missing num_classes line");
    {
        auto tok = split_ws(line);
        if (tok.size() != 2 || tok[0] != "num_classes") cur.fail("expected 'num_classes <k>'");
        net.num_classes = static_cast<int>(field_int(cur, tok, 1));
    }
    if (!cur.next(line)) cur.fail("missing input_shape line");
    {
        auto tok = split_ws(line);
        if (tok.size() < 2 || tok[0] != "input_shape") cur.fail("expected 'input_shape <dims...>'");
        for (std::size_t i = 1; i < tok.size(); ++i)
            net.input_shape.push_back(static_cast<int>(field_int(cur, tok, i)));
    }
    if (!cur.next(line)) cur.fail("missing layers line");
    long long layer_count = 0;
    {
        auto tok = split_ws(line);
        if (tok.size() != 2 || tok[0] != "layers") cur.fail("expected 'layers <n>'");
        layer_count = field_int(cur, tok, 1);
        if (layer_count < 1) cur.fail("layer count must be >= 1");
    }

    std::size_t total_params = 0;
    for (long long i = 0; i < layer_count; ++i) {
        if (!cur.next(line)) cur.fail("missing layer line " + std::to_string(i));
        auto tok = split_ws(line);
        if (tok.size() < 2 || tok[0] != "layer") cur.fail("expected 'layer <kind> ...'");
        LayerKind kind;
        try {
            kind = layer_kind_from_name(std::string(tok[1]));
        } catch (const Error&) {
            cur.fail("unknown layer kind '" + std::string(tok[1]) + "'");
        }
        LayerSpec spec;
        switch (kind) {
        case LayerKind::dense: {
            if (tok.size() != 6 || tok[2] != "in" || tok[4] != "out")
                cur.fail("expected 'layer dense in <n> out <n>'");
            spec = LayerSpec::dense(static_cast<int>(field_int(cur, tok, 3)),
                                    static_cast<int>(field_int(cur, tok, 5)));
            break;
        }
        case LayerKind::conv2d: {
            if (tok.size() != 12 || tok[2] != "in_ch" || tok[4] != "out_ch" || tok[6] != "kh" ||
                tok[8] != "kw" || tok[10] != "stride")
                cur.fail("expected 'layer conv2d in_ch <n> out_ch <n> kh <n> kw <n> stride <n>'");
            spec = LayerSpec::conv2d(static_cast<int>(field_int(cur, tok, 3)),
                                     static_cast<int>(field_int(cur, tok, 5)),
                                     static_cast<int>(field_int(cur, tok, 7)),
                                     static_cast<int>(field_int(cur, tok, 9)),
                                     static_cast<int>(field_int(cur, tok, 11)));
            break;
        }
        case LayerKind::relu:
            spec = LayerSpec::relu();
            break;
        case LayerKind::flatten:
            spec = LayerSpec::flatten();
            break;
        case LayerKind::softmax:
            spec = LayerSpec::softmax();
            break;
        }
        spec.weights.clear();
        spec.bias.clear();
        total_params += spec.param_count();
        net.layers.push_back(std::move(spec));
    }

    if (!cur.next(line)) cur.fail("missing blob line");
    long long declared = 0;
    {
        auto tok = split_ws(line);
        if (tok.size() != 2 || tok[0] != "blob") cur.fail("expected 'blob <count>'");
        declared = field_int(cur, tok, 1);
    }
    if (declared != static_cast<long long>(total_params))
        cur.fail("blob declares " + std::to_string(declared) + " floats but layers need " +
                 std::to_string(total_params));

    const std::size_t blob_bytes = bytes.size() - cur.pos;
    const std::size_t expected_bytes = total_params * 4;
    if (blob_bytes != expected_bytes)
        throw LengthError(path + ": weight blob holds " + std::to_string(blob_bytes / 4) +
                          " floats (" + std::to_string(blob_bytes) + " bytes), expected " +
                          std::to_string(total_params) + " floats (" +
                          std::to_string(expected_bytes) + " bytes)");

    const char* p = bytes.data() + cur.pos;
    for (LayerSpec& l : net.layers) {
        l.weights.resize(l.weight_count());
        for (float& v : l.weights) {
            v = read_le_f32(p);
            p += 4;
        }
        l.bias.resize(l.bias_count());
        for (float& v : l.bias) {
            v = read_le_f32(p);
            p += 4;
        }
    }
    net.validate();
    return net;
}

Dataset load_dataset(const std::string& path, DatasetFormat format, int num_classes) {
    if (format == DatasetFormat::idx) {
        std::string labels_path = path;
        bool changed = false;
        for (const auto& [from, to] :
             {std::pair<std::string, std::string>{"images", "labels"}, {"idx3", "idx1"}}) {
            std::size_t at = labels_path.find(from);
            if (at != std::string::npos) {
                labels_path.replace(at, from.size(), to);
                changed = true;
            }
        }
        if (!changed)
            throw IoError("cannot derive label file from " + path +
                          " (no 'images'/'idx3' in the name); load the pair explicitly");
        return load_dataset_idx(path, labels_path, num_classes);
    }

    const std::string text = read_binary_file(path);
    Dataset data;
    std::size_t expected_width = 0;
    std::size_t line_start = 0;
    int max_label = -1;
    while (line_start < text.size()) {
        std::size_t nl = text.find('\n', line_start);
        std::string_view line = std::string_view(text).substr(
            line_start, nl == std::string::npos ? std::string::npos : nl - line_start);
        const std::size_t this_line = line_start;
        line_start = nl == std::string::npos ? text.size() : nl + 1;
        if (line.empty()) continue;
        auto fields = split_char(line, ',');
        if (fields.size() < 2)
            throw ParseError(path + ": need a label and at least one feature at byte offset " +
                             std::to_string(this_line));
        if (expected_width == 0) expected_width = fields.size();
        if (fields.size() != expected_width)
            throw ParseError(path + ": ragged row (" + std::to_string(fields.size()) +
                             " fields, expected " + std::to_string(expected_width) +
                             ") at byte offset " + std::to_string(this_line));
        long long label;
        try {
            label = parse_int(fields[0]);
        } catch (const ParseError&) {
            throw ParseError(path + ": bad label '" + std::string(fields[0]) +
                             "' at byte offset " + std::to_string(this_line));
        }
        if (label < 0)
            throw LabelRangeError(path + ": negative label at byte offset " +
                                  std::to_string(this_line));
        Tensor x;
        x.shape = {static_cast<int>(expected_width - 1)};
        x.data.reserve(expected_width - 1);
        for (std::size_t i = 1; i < fields.size(); ++i) {
            double v;
            try {
                v = parse_double(fields[i]);
            } catch (const ParseError&) {
                throw ParseError(path + ": bad feature '" + std::string(fields[i]) +
                                 "' at byte offset " + std::to_string(this_line));
            }
            x.data.push_back(static_cast<float>(v));
        }
        data.inputs.push_back(std::move(x));
        data.labels.push_back(static_cast<int>(label));
        max_label = std::max(max_label, static_cast<int>(label));
    }
    if (data.inputs.empty()) throw EmptyInputError(path + ": no samples");
    data.num_classes = num_classes > 0 ? num_classes : max_label + 1;
    data.validate();
    return data;
}

Dataset load_dataset_idx(const std::string& images_path, const std::string& labels_path,
                         int num_classes) {
    const std::string img = read_binary_file(images_path);
    const std::string lab = read_binary_file(labels_path);
    if (img.empty()) throw EmptyInputError(images_path + ": empty file");
    if (lab.empty()) throw EmptyInputError(labels_path + ": empty file");

    if (read_be_u32(img, 0, images_path) != 0x00000803u)
        throw ParseError(images_path + ": bad idx image magic at byte offset 0");
    if (read_be_u32(lab, 0, labels_path) != 0x00000801u)
        throw ParseError(labels_path + ": bad idx label magic at byte offset 0");

    const std::uint32_t n = read_be_u32(img, 4, images_path);
    const std::uint32_t rows = read_be_u32(img, 8, images_path);
    const std::uint32_t cols = read_be_u32(img, 12, images_path);
    const std::uint32_t n_lab = read_be_u32(lab, 4, labels_path);
    if (n != n_lab)
        throw DimensionError(images_path + " has " + std::to_string(n) + " images but " +
                             labels_path + " has " + std::to_string(n_lab) + " labels");
    if (n == 0) throw EmptyInputError(images_path + ": zero samples declared");

    const std::size_t pixels = static_cast<std::size_t>(rows) * cols;
    if (img.size() != 16 + static_cast<std::size_t>(n) * pixels)
        throw LengthError(images_path + ": expected " +
                          std::to_string(16 + static_cast<std::size_t>(n) * pixels) +
                          " bytes, have " + std::to_string(img.size()));
    if (lab.size() != 8 + static_cast<std::size_t>(n))
        throw LengthError(labels_path + ": expected " + std::to_string(8 + static_cast<std::size_t>(n)) +
                          " bytes, have " + std::to_string(lab.size()));

    Dataset data;
    data.inputs.reserve(n);
    data.labels.reserve(n);
    int max_label = -1;
    const auto* ip = reinterpret_cast<const unsigned char*>(img.data()) + 16;
    const auto* lp = reinterpret_cast<const unsigned char*>(lab.data()) + 8;
    for (std::uint32_t s = 0; s < n; ++s) {
        Tensor x;
        x.shape = {static_cast<int>(rows), static_cast<int>(cols)};
        x.data.resize(pixels);
        for (std::size_t t = 0; t < pixels; ++t)
            x.data[t] = static_cast<float>(ip[static_cast<std::size_t>(s) * pixels + t]) / 255.0f;
        data.inputs.push_back(std::move(x));
        const int label = static_cast<int>(lp[s]);
        data.labels.push_back(label);
        max_label = std::max(max_label, label);
    }
    data.num_classes = num_classes > 0 ? num_classes : max_label + 1;
    data.validate();
    return data;
}

void write_dataset_csv(const Dataset& data, const std::string& path) {
    data.validate();
    std::string out;
    for (std::size_t i = 0; i < data.size(); ++i) {
        out += format_int(data.labels[i]);
        for (float v : data.inputs[i].data) {
            out += ',';
            out += format_float(v);
        }
        out += '\n';
    }
    write_text_file(path, out);
}

DatasetFormat dataset_format_for_path(const std::string& path) {
    return path.size() >= 4 && path.compare(path.size() - 4, 4, ".csv") == 0 ? DatasetFormat::csv
                                                                             : DatasetFormat::idx;
}

void write_curves(const std::vector<CurveExport>& curves, const std::string& path) {
    if (curves.empty()) throw EmptyInputError("no curves to write");
    std::string out = "alpha,accuracy,pcd,model_id,perturbation_kind,layer\n";
    for (const CurveExport& c : curves) {
        const PCDCurve F = pcd(c.curve);
        for (std::size_t i = 0; i < c.curve.alphas.size(); ++i) {
            out += format_double(c.curve.alphas[i]);
            out += ',';
            out += format_double(c.curve.accuracies[i]);
            out += ',';
            out += format_double(F.values[i]);
            out += ',';
            out += c.model_id;
            out += ',';
            out += perturb_kind_name(c.curve.spec.kind);
            out += ',';
            out += format_int(c.curve.spec.layer);
            out += '\n';
        }
    }
    write_text_file(path, out);
}

std::vector<CurveExport> read_curves(const std::string& path) {
    const std::string text = read_binary_file(path);
    std::vector<CurveExport> curves;
    std::string current_key;
    std::size_t line_start = 0;
    bool header_seen = false;
    while (line_start < text.size()) {
        std::size_t nl = text.find('\n', line_start);
        std::string_view line = std::string_view(text).substr(
            line_start, nl == std::string::npos ? std::string::npos : nl - line_start);
        const std::size_t this_line = line_start;
        line_start = nl == std::string::npos ? text.size() : nl + 1;
        if (line.empty()) continue;
        if (!header_seen) {
            if (line != "alpha,accuracy,pcd,model_id,perturbation_kind,layer")
                throw ParseError(path + ": unexpected header at byte offset " +
                                 std::to_string(this_line));
            header_seen = true;
            continue;
        }
        auto f = split_char(line, ',');
        if (f.size() != 6)
            throw ParseError(path + ": expected 6 fields at byte offset " +
                             std::to_string(this_line));
        const std::string key = std::string(f[3]) + '\x1f' + std::string(f[4]) + '\x1f' +
                                std::string(f[5]);
        if (curves.empty() || key != current_key) {
            CurveExport c;
            c.model_id = std::string(f[3]);
            c.curve.spec.kind = perturb_kind_from_name(std::string(f[4]));
            c.curve.spec.layer = static_cast<int>(parse_int(f[5]));
            curves.push_back(std::move(c));
            current_key = key;
        }
        curves.back().curve.alphas.push_back(parse_double(f[0]));
        curves.back().curve.accuracies.push_back(parse_double(f[1]));
    }
    if (!header_seen) throw EmptyInputError(path + ": empty curve file");
    for (CurveExport& c : curves) {
        c.curve.spec.alpha_grid = c.curve.alphas;
        c.curve.base_accuracy = c.curve.accuracies.empty() ? 0.0 : c.curve.accuracies.front();
    }
    return curves;
}

void CorpusManifest::validate() const {
    for (const ManifestEntry& e : entries) {
        const double expect = e.train_accuracy - e.test_accuracy;
        if (std::abs(e.generalization_gap - expect) > 1e-9)
            throw NumericError("manifest entry " + e.model_id + ": gap " +
                               format_double(e.generalization_gap) + " != train - test = " +
                               format_double(expect));
        if (e.hyperparams.size() != axes.size())
            throw DimensionError("manifest entry " + e.model_id + ": expected " +
                                 std::to_string(axes.size()) + " hyperparameters");
        for (std::size_t a = 0; a < axes.size(); ++a)
            if (e.hyperparams[a].first != axes[a])
                throw DimensionError("manifest entry " + e.model_id + ": axis '" +
                                     e.hyperparams[a].first + "' does not match declared '" +
                                     axes[a] + "'");
    }
}

void write_manifest(const CorpusManifest& manifest, const std::string& path) {
    manifest.validate();
    std::string out = "gipal-manifest 1\naxes";
    for (const std::string& a : manifest.axes) out += ' ' + a;
    out += '\n';
    for (const ManifestEntry& e : manifest.entries) {
        out += "model " + e.model_id + " file " + e.weight_file;
        for (const auto& [axis, value] : e.hyperparams) out += ' ' + axis + '=' + value;
        out += " train_acc=" + format_double(e.train_accuracy);
        out += " test_acc=" + format_double(e.test_accuracy);
        out += " gap=" + format_double(e.generalization_gap);
        out += " below_target=";
        out += e.below_target ? '1' : '0';
        out += '\n';
    }
    write_text_file(path, out);
}

CorpusManifest load_manifest(const std::string& path) {
    const std::string text = read_binary_file(path);
    LineCursor cur{text};
    std::string_view line;
    if (!cur.next(line) || line != "gipal-manifest 1")
        cur.fail(path + ": bad manifest magic");
    CorpusManifest m;
    if (!cur.next(line)) cur.fail(path + ": missing axes line");
    {
        auto tok = split_ws(line);
        if (tok.empty() || tok[0] != "axes") cur.fail(path + ": expected 'axes <names...>'");
        for (std::size_t i = 1; i < tok.size(); ++i) m.axes.emplace_back(tok[i]);
    }
    while (cur.next(line)) {
        if (line.empty()) continue;
        auto tok = split_ws(line);
        if (tok.size() < 4 || tok[0] != "model" || tok[2] != "file")
            cur.fail(path + ": expected 'model <id> file <path> k=v ...'");
        ManifestEntry e;
        e.model_id = std::string(tok[1]);
        e.weight_file = std::string(tok[3]);
        bool have_train = false, have_test = false, have_gap = false;
        for (std::size_t i = 4; i < tok.size(); ++i) {
            std::size_t eq = tok[i].find('=');
            if (eq == std::string_view::npos)
                cur.fail(path + ": expected key=value, got '" + std::string(tok[i]) + "'");
            std::string key(tok[i].substr(0, eq));
            std::string value(tok[i].substr(eq + 1));
            try {
                if (key == "train_acc") {
                    e.train_accuracy = parse_double(value);
                    have_train = true;
                } else if (key == "test_acc") {
                    e.test_accuracy = parse_double(value);
                    have_test = true;
                } else if (key == "gap") {
                    e.generalization_gap = parse_double(value);
                    have_gap = true;
                } else if (key == "below_target") {
                    e.below_target = parse_int(value) != 0;
                } else {
                    e.hyperparams.emplace_back(std::move(key), std::move(value));
                }
            } catch (const ParseError&) {
                cur.fail(path + ": bad numeric value in '" + std::string(tok[i]) + "'");
            }
        }
        if (!have_train || !have_test || !have_gap)
            cur.fail(path + ": entry " + e.model_id + " missing train_acc/test_acc/gap");
        m.entries.push_back(std::move(e));
    }
    try {
        m.validate();
    } catch (const Error& err) {
        throw ParseError(path + ": " + err.what());
    }
    return m;
}

void write_scores_csv(const std::vector<ScoreRecord>& records, const std::string& path) {
    std::string out = "model_id,measure,value\n";
    for (const ScoreRecord& r : records) {
        out += r.model_id;
        out += ',';
        out += r.measure;
        out += ',';
        out += format_double(r.value);
        out += '\n';
    }
    write_text_file(path, out);
}

std::vector<ScoreRecord> load_scores_csv(const std::string& path) {
    const std::string text = read_binary_file(path);
    std::vector<ScoreRecord> records;
    std::size_t line_start = 0;
    bool header_seen = false;
    while (line_start < text.size()) {
        std::size_t nl = text.find('\n', line_start);
        std::string_view line = std::string_view(text).substr(
            line_start, nl == std::string::npos ? std::string::npos : nl - line_start);
        const std::size_t this_line = line_start;
        line_start = nl == std::string::npos ? text.size() : nl + 1;
        if (line.empty()) continue;
        if (!header_seen) {
            if (line != "model_id,measure,value")
                throw ParseError(path + ": unexpected header at byte offset " +
                                 std::to_string(this_line));
            header_seen = true;
            continue;
        }
        auto f = split_char(line, ',');
        if (f.size() != 3)
            throw ParseError(path + ": expected 3 fields at byte offset " +
                             std::to_string(this_line));
        records.push_back({std::string(f[0]), std::string(f[1]), parse_double(f[2])});
    }
    if (!header_seen) throw EmptyInputError(path + ": empty score file");
    return records;
}

} // namespace gipal
