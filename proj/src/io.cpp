#include "streamlens/io.hpp"

#include "streamlens/common.hpp"

#include <glob.h>
#include <zlib.h>

#include <algorithm>
#include <fstream>
#include <sstream>

namespace streamlens::io {

namespace fs = std::filesystem;

struct LineReader::Impl {
    gzFile file = nullptr;
    std::string path;
    std::vector<char> buffer = std::vector<char>(1 << 16);
};

LineReader::LineReader(const fs::path& path) : impl_(std::make_unique<Impl>()) {
    impl_->path = path.string();
    impl_->file = gzopen(impl_->path.c_str(), "rb");
    if (impl_->file == nullptr) throw InputError("cannot open input file " + impl_->path);
    gzbuffer(impl_->file, 1 << 18);
}

LineReader::~LineReader() {
    if (impl_ && impl_->file != nullptr) gzclose(impl_->file);
}

LineReader::LineReader(LineReader&&) noexcept = default;
LineReader& LineReader::operator=(LineReader&&) noexcept = default;

bool LineReader::next(std::string& line) {
    line.clear();
    auto& buf = impl_->buffer;
    bool any = false;
    while (gzgets(impl_->file, buf.data(), static_cast<int>(buf.size())) != nullptr) {
        any = true;
        std::string_view chunk(buf.data());
        if (!chunk.empty() && chunk.back() == '\n') {
            chunk.remove_suffix(1);
            if (!chunk.empty() && chunk.back() == '\r') chunk.remove_suffix(1);
            line.append(chunk);
            return true;
        }
        line.append(chunk);
    }
    int err = Z_OK;
    const char* msg = gzerror(impl_->file, &err);
    if (err != Z_OK && err != Z_STREAM_END) {
        throw InputError("read error in " + impl_->path + ": " + msg);
    }
    return any;
}

std::vector<std::string> read_lines(const fs::path& path) {
    LineReader reader(path);
    std::vector<std::string> lines;
    std::string line;
    while (reader.next(line)) lines.push_back(line);
    return lines;
}

std::string read_file(const fs::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw InputError("cannot open " + path.string());
    std::ostringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

void write_file_atomic(const fs::path& path, std::string_view content) {
    if (path.has_parent_path()) fs::create_directories(path.parent_path());
    fs::path tmp = path;
    tmp += ".tmp";
    {
        std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
        if (!out) throw Error("cannot write " + tmp.string());
        out.write(content.data(), static_cast<std::streamsize>(content.size()));
        if (!out) throw Error("short write to " + tmp.string());
    }
    fs::rename(tmp, path);
}

void write_gzip_file(const fs::path& path, std::string_view content) {
    if (path.has_parent_path()) fs::create_directories(path.parent_path());
    gzFile file = gzopen(path.string().c_str(), "wb");
    if (file == nullptr) throw Error("cannot write " + path.string());
    const int written = gzwrite(file, content.data(), static_cast<unsigned>(content.size()));
    gzclose(file);
    if (written != static_cast<int>(content.size())) throw Error("short write to " + path.string());
}

std::vector<fs::path> expand_inputs(const std::string& pattern) {
    std::vector<fs::path> out;
    std::error_code ec;
    if (fs::is_directory(pattern, ec)) {
        for (const auto& entry : fs::directory_iterator(pattern)) {
            if (entry.is_regular_file()) out.push_back(entry.path());
        }
    } else {
        glob_t g{};
        if (::glob(pattern.c_str(), 0, nullptr, &g) == 0) {
            for (std::size_t i = 0; i < g.gl_pathc; ++i) out.emplace_back(g.gl_pathv[i]);
        }
        globfree(&g);
    }
    std::sort(out.begin(), out.end());
    return out;
}

CsvRow split_csv_line(std::string_view line) {
    CsvRow fields;
    std::string field;
    bool quoted = false;
    for (std::size_t i = 0; i < line.size(); ++i) {
        const char c = line[i];
        if (quoted) {
            if (c == '"') {
                if (i + 1 < line.size() && line[i + 1] == '"') {
                    field.push_back('"');
                    ++i;
                } else {
                    quoted = false;
                }
            } else {
                field.push_back(c);
            }
        } else if (c == '"') {
            quoted = true;
        } else if (c == ',') {
            fields.push_back(std::move(field));
            field.clear();
        } else {
            field.push_back(c);
        }
    }
    fields.push_back(std::move(field));
    return fields;
}

std::string csv_escape(std::string_view field) {
    if (field.find_first_of(",\"\n\r") == std::string_view::npos) return std::string(field);
    std::string out = "\"";
    for (char c : field) {
        if (c == '"') out.push_back('"');
        out.push_back(c);
    }
    out.push_back('"');
    return out;
}

std::string join_csv(const CsvRow& row) {
    std::string out;
    for (std::size_t i = 0; i < row.size(); ++i) {
        if (i) out.push_back(',');
        out += csv_escape(row[i]);
    }
    return out;
}

std::size_t CsvTable::column(std::string_view name) const {
    auto it = std::find(header.begin(), header.end(), name);
    if (it == header.end()) throw InputError("missing CSV column '" + std::string(name) + "'");
    return static_cast<std::size_t>(it - header.begin());
}

CsvTable parse_csv(std::string_view text, std::string_view origin) {
    CsvTable table;
    std::size_t line_no = 0;
    std::size_t pos = 0;
    bool have_header = false;
    while (pos <= text.size()) {
        std::size_t end = text.find('\n', pos);
        if (end == std::string_view::npos) end = text.size();
        std::string_view line = text.substr(pos, end - pos);
        pos = end + 1;
        ++line_no;
        if (!line.empty() && line.back() == '\r') line.remove_suffix(1);
        if (line.empty()) continue;
        auto row = split_csv_line(line);
        if (!have_header) {
            table.header = std::move(row);
            have_header = true;
            continue;
        }
        if (row.size() != table.header.size()) {
            throw InputError(std::string(origin) + ":" + std::to_string(line_no) + ": expected " +
                             std::to_string(table.header.size()) + " fields, got " +
                             std::to_string(row.size()));
        }
        table.rows.push_back(std::move(row));
    }
    if (!have_header) throw InputError(std::string(origin) + ": empty CSV (no header)");
    return table;
}

CsvTable read_csv(const fs::path& path) {
    std::string text;
    LineReader reader(path);
    std::string line;
    while (reader.next(line)) {
        text += line;
        text.push_back('\n');
    }
    return parse_csv(text, path.string());
}

std::string format_key_values(const KeyValues& kv) {
    std::string out;
    for (const auto& [k, v] : kv) {
        out += k;
        out.push_back('=');
        out += v;
        out.push_back('\n');
    }
    return out;
}

KeyValues parse_key_values(std::string_view text) {
    KeyValues kv;
    std::size_t pos = 0;
    while (pos < text.size()) {
        std::size_t end = text.find('\n', pos);
        if (end == std::string_view::npos) end = text.size();
        auto strip = [](std::string_view s) {
            const auto b = s.find_first_not_of(" \t\r");
            if (b == std::string_view::npos) return std::string_view{};
            return s.substr(b, s.find_last_not_of(" \t\r") - b + 1);
        };
        std::string_view line = strip(text.substr(pos, end - pos));
        pos = end + 1;
        if (line.empty() || line.front() == '#') continue;
        const auto eq = line.find('=');
        if (eq == std::string_view::npos) continue;
        kv[std::string(strip(line.substr(0, eq)))] = std::string(strip(line.substr(eq + 1)));
    }
    return kv;
}

}  // namespace streamlens::io
