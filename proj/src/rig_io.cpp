#include "fbev/rig_io.hpp"

#include "fbev/tensor_io.hpp"

#include <fstream>
#include <sstream>

namespace fbev {

namespace {

struct Section {
    std::string kind;  // "grid", "depth_bins", "camera"
    std::string name;  // camera name
    int line = 0;
    std::map<std::string, std::pair<std::string, int>> entries;  // key -> (value, line)
};

[[noreturn]] void fail(const std::string& file, int line, const std::string& msg) {
    std::ostringstream os;
    os << file << ":" << line << ": " << msg;
    throw ConfigError(os.str());
}

std::string trim(const std::string& s) {
    const auto a = s.find_first_not_of(" \t\r");
    if (a == std::string::npos) return "";
    const auto b = s.find_last_not_of(" \t\r");
    return s.substr(a, b - a + 1);
}

std::vector<double> parse_numbers(const std::string& file, int line, const std::string& value,
                                  size_t expected) {
    std::istringstream is(value);
    std::vector<double> out;
    double v;
    while (is >> v) out.push_back(v);
    std::string rest;
    if (is.clear(), is >> rest) fail(file, line, "trailing junk in numeric list");
    if (expected != 0 && out.size() != expected) {
        std::ostringstream os;
        os << "expected " << expected << " numbers, found " << out.size();
        fail(file, line, os.str());
    }
    return out;
}

class SectionReader {
  public:
    SectionReader(const std::string& file, const Section& s) : file_(file), s_(s) {}

    bool has(const std::string& key) const { return s_.entries.count(key) > 0; }

    double number(const std::string& key) const {
        return parse_numbers(file_, line_of(key), value_of(key), 1)[0];
    }
    double number_or(const std::string& key, double fallback) const {
        return has(key) ? number(key) : fallback;
    }
    std::vector<double> numbers(const std::string& key, size_t expected) const {
        return parse_numbers(file_, line_of(key), value_of(key), expected);
    }
    std::string text(const std::string& key) const { return value_of(key); }

    const std::string& value_of(const std::string& key) const {
        auto it = s_.entries.find(key);
        if (it == s_.entries.end()) fail(file_, s_.line, "missing key '" + key + "'");
        return it->second.first;
    }
    int line_of(const std::string& key) const {
        auto it = s_.entries.find(key);
        return it == s_.entries.end() ? s_.line : it->second.second;
    }

  private:
    const std::string& file_;
    const Section& s_;
};

RigCamera parse_camera(const std::string& file, const Section& s) {
    SectionReader r(file, s);
    RigCamera cam;
    cam.name = s.name;

    DistortionModel& m = cam.intrinsics.model;
    const std::string kind_name = r.text("model");
    try {
        m.kind = model_kind_from_string(kind_name);
    } catch (const ConfigError& e) {
        fail(file, r.line_of("model"), e.what());
    }
    m.theta_max = r.number_or("theta_max", m.kind == ModelKind::Rectilinear ? M_PI / 2.0 : 1.9);
    switch (m.kind) {
        case ModelKind::Polynomial: {
            const auto a = r.numbers("coeffs", 4);
            m.poly << a[0], a[1], a[2], a[3];
            m.f = r.number_or("f", a[0]);
            break;
        }
        case ModelKind::UCM:
            m.f = r.number("f");
            m.xi = r.numbers("coeffs", 1)[0];
            break;
        case ModelKind::EUCM: {
            m.f = r.number("f");
            const auto c = r.numbers("coeffs", 2);
            m.alpha = c[0];
            m.beta = c[1];
            break;
        }
        case ModelKind::Rectilinear:
        case ModelKind::Stereographic:
            m.f = r.number("f");
            break;
        case ModelKind::DoubleSphere: {
            m.f = r.number("f");
            const auto c = r.numbers("coeffs", 2);
            m.xi = c[0];
            m.alpha = c[1];
            break;
        }
    }
    if (r.has("inverse_poly")) {
        const auto p = r.numbers("inverse_poly", 9);
        std::array<double, 9> arr;
        std::copy(p.begin(), p.end(), arr.begin());
        m.inverse_poly = arr;
    }

    cam.intrinsics.width = static_cast<int>(r.number("width"));
    cam.intrinsics.height = static_cast<int>(r.number("height"));
    cam.intrinsics.cx = r.number("cx");
    cam.intrinsics.cy = r.number("cy");

    const auto rot = r.numbers("rotation", 9);
    for (int i = 0; i < 3; ++i)
        for (int j = 0; j < 3; ++j) cam.extrinsics.rotation(i, j) = rot[static_cast<size_t>(i) * 3 + j];
    const auto t = r.numbers("translation", 3);
    cam.extrinsics.translation << t[0], t[1], t[2];

    try {
        cam.intrinsics.validate();
        cam.extrinsics.validate();
    } catch (const ConfigError& e) {
        fail(file, s.line, std::string("camera '") + s.name + "': " + e.what());
    }
    return cam;
}

}  // namespace

Rig parse_rig(const std::string& text, const std::string& filename) {
    std::vector<Section> sections;
    std::istringstream is(text);
    std::string line;
    int lineno = 0;
    while (std::getline(is, line)) {
        ++lineno;
        const std::string t = trim(line);
        if (t.empty() || t[0] == '#') continue;
        if (t.front() == '[') {
            if (t.back() != ']') fail(filename, lineno, "unterminated section header");
            std::istringstream hs(t.substr(1, t.size() - 2));
            Section s;
            s.line = lineno;
            hs >> s.kind;
            hs >> s.name;
            if (s.kind != "grid" && s.kind != "depth_bins" && s.kind != "camera")
                fail(filename, lineno, "unknown section '" + s.kind + "'");
            if (s.kind == "camera" && s.name.empty())
                fail(filename, lineno, "camera section needs a name");
            sections.push_back(std::move(s));
            continue;
        }
        if (sections.empty()) fail(filename, lineno, "entry before any section header");
        const auto eq = t.find('=');
        if (eq == std::string::npos) fail(filename, lineno, "expected 'key = value'");
        const std::string key = trim(t.substr(0, eq));
        const std::string value = trim(t.substr(eq + 1));
        if (key.empty()) fail(filename, lineno, "empty key");
        auto& entries = sections.back().entries;
        if (!entries.emplace(key, std::make_pair(value, lineno)).second)
            fail(filename, lineno, "duplicate key '" + key + "'");
    }

    Rig rig;
    bool saw_grid = false, saw_bins = false;
    for (const auto& s : sections) {
        SectionReader r(filename, s);
        if (s.kind == "grid") {
            rig.grid.x_min = r.number("x_min");
            rig.grid.x_max = r.number("x_max");
            rig.grid.y_min = r.number("y_min");
            rig.grid.y_max = r.number("y_max");
            rig.grid.cell = r.number("cell");
            try {
                rig.grid.validate();
            } catch (const ConfigError& e) {
                fail(filename, s.line, e.what());
            }
            saw_grid = true;
        } else if (s.kind == "depth_bins") {
            rig.bins.d_min = r.number("d_min");
            rig.bins.d_max = r.number("d_max");
            rig.bins.step = r.number("step");
            try {
                rig.bins.validate();
            } catch (const ConfigError& e) {
                fail(filename, s.line, e.what());
            }
            saw_bins = true;
        } else {
            rig.cameras.push_back(parse_camera(filename, s));
        }
    }
    if (!saw_grid) fail(filename, 1, "missing [grid] section");
    if (!saw_bins) fail(filename, 1, "missing [depth_bins] section");
    if (rig.cameras.empty()) fail(filename, 1, "no [camera NAME] sections");
    return rig;
}

Rig load_rig(const std::string& path) {
    std::ifstream is(path);
    if (!is) throw ConfigError("cannot open rig file: " + path);
    std::ostringstream buf;
    buf << is.rdbuf();
    return parse_rig(buf.str(), path);
}

std::string format_rig(const Rig& rig) {
    std::ostringstream os;
    os.precision(17);
    os << "[grid]\n";
    os << "x_min = " << rig.grid.x_min << "\nx_max = " << rig.grid.x_max << "\n";
    os << "y_min = " << rig.grid.y_min << "\ny_max = " << rig.grid.y_max << "\n";
    os << "cell = " << rig.grid.cell << "\n\n";
    os << "[depth_bins]\n";
    os << "d_min = " << rig.bins.d_min << "\nd_max = " << rig.bins.d_max << "\nstep = "
       << rig.bins.step << "\n";
    for (const auto& cam : rig.cameras) {
        const DistortionModel& m = cam.intrinsics.model;
        os << "\n[camera " << cam.name << "]\n";
        os << "model = " << to_string(m.kind) << "\n";
        os << "f = " << m.f << "\n";
        switch (m.kind) {
            case ModelKind::Polynomial:
                os << "coeffs = " << m.poly[0] << " " << m.poly[1] << " " << m.poly[2] << " "
                   << m.poly[3] << "\n";
                break;
            case ModelKind::UCM:
                os << "coeffs = " << m.xi << "\n";
                break;
            case ModelKind::EUCM:
                os << "coeffs = " << m.alpha << " " << m.beta << "\n";
                break;
            case ModelKind::DoubleSphere:
                os << "coeffs = " << m.xi << " " << m.alpha << "\n";
                break;
            default:
                break;
        }
        if (m.inverse_poly) {
            os << "inverse_poly =";
            for (double p : *m.inverse_poly) os << " " << p;
            os << "\n";
        }
        os << "theta_max = " << m.theta_max << "\n";
        os << "width = " << cam.intrinsics.width << "\nheight = " << cam.intrinsics.height << "\n";
        os << "cx = " << cam.intrinsics.cx << "\ncy = " << cam.intrinsics.cy << "\n";
        os << "rotation =";
        for (int i = 0; i < 3; ++i)
            for (int j = 0; j < 3; ++j) os << " " << cam.extrinsics.rotation(i, j);
        os << "\ntranslation = " << cam.extrinsics.translation.x() << " "
           << cam.extrinsics.translation.y() << " " << cam.extrinsics.translation.z() << "\n";
    }
    return os.str();
}

void save_rig(const std::string& path, const Rig& rig) { atomic_write(path, format_rig(rig)); }

}  // namespace fbev
