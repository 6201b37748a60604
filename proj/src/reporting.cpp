#include "osids/reporting.hpp"

#include <cstdio>
#include <sstream>

#include "osids/error.hpp"
#include "osids/flow_assembly.hpp"

namespace osids {

namespace {

std::string fmt(double v, const char* spec = "%.17g") {
    char buf[64];
    std::snprintf(buf, sizeof(buf), spec, v);
    return buf;
}

std::string metric_str(const std::optional<double>& v) {
    return v ? fmt(*v, "%.6f") : "undefined";
}

} // namespace

std::string verdicts_to_csv(const std::vector<DetectionVerdict>& verdicts,
                            const std::vector<std::string>& class_names) {
    std::string out = "# classes ";
    for (std::size_t i = 0; i < class_names.size(); ++i) {
        if (i) out += ",";
        out += csv_quote(class_names[i]);
    }
    out += "\n";

    const std::size_t n_scores = class_names.size() + 1;
    out += "flow_key,start_time,final_label,stage,assigned_class,recon_loss";
    for (std::size_t i = 0; i < n_scores; ++i) out += ",vhat_" + std::to_string(i);
    out += "\n";

    for (const auto& v : verdicts) {
        out += v.key.to_string();
        out += "," + fmt(v.start_time, "%.6f");
        out += "," + csv_quote(v.final_label);
        out += std::string(",") + stage_name(v.stage);
        out += ",";
        if (v.assigned_class)
            out += csv_quote(class_names.at(static_cast<std::size_t>(*v.assigned_class)));
        out += ",";
        if (v.recon_loss) out += fmt(*v.recon_loss);
        for (double s : v.scores) out += "," + fmt(s);
        out += "\n";
    }
    return out;
}

VerdictFile parse_verdict_csv(const std::string& text) {
    std::istringstream in(text);
    std::string line;
    VerdictFile file;
    bool saw_header = false;
    std::size_t lineno = 0;
    while (std::getline(in, line)) {
        ++lineno;
        if (!line.empty() && line.back() == '\r') line.pop_back();
        if (line.empty()) continue;
        if (line.rfind("# classes ", 0) == 0) {
            file.class_names = split_csv_line(line.substr(10));
            continue;
        }
        if (!saw_header) {
            if (line.rfind("flow_key,", 0) != 0)
                throw Error("verdict CSV: missing header line");
            saw_header = true;
            continue;
        }
        auto fields = split_csv_line(line);
        if (fields.size() < 7)
            throw Error("verdict CSV line " + std::to_string(lineno) + ": too few fields");
        VerdictRow row;
        row.flow_key = fields[0];
        row.start_time = std::stod(fields[1]);
        row.final_label = fields[2];
        row.stage = stage_from_name(fields[3]);
        row.assigned_class = fields[4];
        if (!fields[5].empty()) row.recon_loss = std::stod(fields[5]);
        for (std::size_t i = 6; i < fields.size(); ++i)
            row.scores.push_back(std::stod(fields[i]));
        file.rows.push_back(std::move(row));
    }
    if (!saw_header) throw Error("verdict CSV: empty file");
    return file;
}

EvalReport evaluate(const std::vector<std::string>& predicted,
                    const std::vector<std::string>& truth,
                    const std::vector<std::string>& known_classes) {
    EvalReport report;
    report.matrix = confusion(predicted, truth, known_classes);
    report.binary = binary_metrics(report.matrix);
    report.multi = multi_metrics(report.matrix);
    return report;
}

std::string render_report_text(const EvalReport& report) {
    std::string out;
    out += "flows " + std::to_string(report.matrix.total()) + "\n";
    out += "binary.acc " + metric_str(report.binary.acc) + "\n";
    out += "binary.f1 " + metric_str(report.binary.f1) + "\n";
    out += "binary.fpr " + metric_str(report.binary.fpr) + "\n";
    out += "multi.r_unk " + metric_str(report.multi.r_unk) + "\n";
    out += "multi.p_wht " + metric_str(report.multi.p_wht) + "\n";
    out += "multi.r_wht " + metric_str(report.multi.r_wht) + "\n";
    out += "multi.f1_wht " + metric_str(report.multi.f1_wht) + "\n";

    const int n = report.matrix.size();
    out += "\nconfusion.raw (rows = predicted, columns = ground truth)\n";
    for (int p = 0; p < n; ++p) {
        out += report.matrix.labels[p] + ":";
        for (int t = 0; t < n; ++t)
            out += " " + std::to_string(report.matrix.at(p, t));
        out += "\n";
    }
    out += "\nconfusion.normalized (columns sum to 1)\n";
    const auto norm = report.matrix.normalized();
    for (int p = 0; p < n; ++p) {
        out += report.matrix.labels[p] + ":";
        for (int t = 0; t < n; ++t)
            out += " " + fmt(norm[static_cast<std::size_t>(p) * n + t], "%.4f");
        out += "\n";
    }
    return out;
}

std::string render_report_csv(const EvalReport& report) {
    std::string out = "metric,value\n";
    out += "binary.acc," + metric_str(report.binary.acc) + "\n";
    out += "binary.f1," + metric_str(report.binary.f1) + "\n";
    out += "binary.fpr," + metric_str(report.binary.fpr) + "\n";
    out += "multi.r_unk," + metric_str(report.multi.r_unk) + "\n";
    out += "multi.p_wht," + metric_str(report.multi.p_wht) + "\n";
    out += "multi.r_wht," + metric_str(report.multi.r_wht) + "\n";
    out += "multi.f1_wht," + metric_str(report.multi.f1_wht) + "\n";
    const int n = report.matrix.size();
    for (int p = 0; p < n; ++p)
        for (int t = 0; t < n; ++t)
            out += "confusion." + csv_quote(report.matrix.labels[p]) + "." +
                   csv_quote(report.matrix.labels[t]) + "," +
                   std::to_string(report.matrix.at(p, t)) + "\n";
    return out;
}

} // namespace osids
