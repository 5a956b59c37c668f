use std::path::{Path, PathBuf};

use shapegpt_core::shapefile::write_dataset;
use shapegpt_core::{Dataset, FieldDescriptor, FieldKind, FieldValue};

use super::input;
use super::render::render_layers;
use crate::invoke::{Args, ExecError, ToolResult};
use crate::workspace::Workspace;

fn output_path(args: &Args, ws: &Workspace, ext: &str) -> Result<PathBuf, ExecError> {
    let mut p = ws.resolve(args.req_text("path")?)?;
    if p.extension().and_then(|e| e.to_str()).map(str::to_ascii_lowercase).as_deref() != Some(ext) {
        let name = format!("{}.{ext}", p.file_name().and_then(|n| n.to_str()).unwrap_or("out"));
        p.set_file_name(name);
    }
    if let Some(dir) = p.parent() {
        std::fs::create_dir_all(dir)?;
    }
    Ok(p)
}

fn shown(ws: &Workspace, p: &Path) -> String {
    p.strip_prefix(ws.sandbox_dir()).unwrap_or(p).display().to_string()
}

pub fn save_shapefile(args: &Args, ws: &mut Workspace) -> Result<ToolResult, ExecError> {
    let (d, h) = input(args, ws, "layer")?;
    let path = output_path(args, ws, "shp")?;
    let files = write_dataset(d, &path)?;
    let n = d.len();
    for f in files.all() {
        ws.record_artifact(f);
    }
    Ok(ToolResult::ok(Some(h.clone()), format!("saved layer '{h}' ({n} features) to {}", shown(ws, &path))))
}

/// Cell text as it would be stored, without DBF padding.
fn cell_text(fd: &FieldDescriptor, v: &FieldValue) -> String {
    match (fd.kind, v) {
        (FieldKind::Numeric | FieldKind::Float, FieldValue::Number(Some(x))) => {
            let s = format!("{:.*}", fd.decimal_count as usize, x);
            if s.trim_start_matches('-').trim_matches(|c| c == '0' || c == '.').is_empty() {
                format!("{:.*}", fd.decimal_count as usize, 0.0)
            } else {
                s
            }
        }
        (FieldKind::Date, FieldValue::Date(Some(d))) => d.format("%Y%m%d").to_string(),
        _ => v.to_string(),
    }
}

pub(crate) fn write_csv(d: &Dataset, path: &Path) -> Result<(), ExecError> {
    let out = |e: csv::Error| ExecError::Output(e.to_string());
    let mut w = csv::Writer::from_path(path).map_err(out)?;
    w.write_record(d.fields().iter().map(|f| f.name.as_str())).map_err(out)?;
    for f in d.features() {
        w.write_record(d.fields().iter().zip(&f.attributes).map(|(fd, v)| cell_text(fd, v))).map_err(out)?;
    }
    w.flush()?;
    Ok(())
}

pub fn save_table_csv(args: &Args, ws: &mut Workspace) -> Result<ToolResult, ExecError> {
    let (d, h) = input(args, ws, "layer")?;
    let path = output_path(args, ws, "csv")?;
    write_csv(d, &path)?;
    let n = d.len();
    ws.record_artifact(path.clone());
    Ok(ToolResult::ok(Some(h.clone()), format!("saved table of '{h}' ({n} rows) to {}", shown(ws, &path))))
}

pub fn render_map_image(args: &Args, ws: &mut Workspace) -> Result<ToolResult, ExecError> {
    let handles = args.text_list("layers")?;
    let layers = handles.iter().map(|h| ws.layer(h)).collect::<Result<Vec<_>, _>>()?;
    let img = render_layers(&layers).ok_or_else(|| ExecError::InvalidArgument("the layers contain no geometry".into()))?;
    let path = output_path(args, ws, "png")?;
    img.save_with_format(&path, image::ImageFormat::Png).map_err(|e| ExecError::Output(e.to_string()))?;
    ws.record_artifact(path.clone());
    Ok(ToolResult::ok(None, format!("rendered {} layer(s) to {}", handles.len(), shown(ws, &path))))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn csv_cells() {
        let n = FieldDescriptor::numeric("N", 10, 2);
        assert_eq!(cell_text(&n, &FieldValue::Number(Some(1.005))), "1.00");
        assert_eq!(cell_text(&n, &FieldValue::Number(Some(-0.001))), "0.00");
        assert_eq!(cell_text(&n, &FieldValue::Number(None)), "");
        let d = FieldDescriptor::date("D");
        assert_eq!(cell_text(&d, &FieldValue::Date(chrono::NaiveDate::from_ymd_opt(2024, 2, 9))), "20240209");
    }
}
