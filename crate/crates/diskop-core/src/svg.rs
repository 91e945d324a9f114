//! Deterministic SVG rendering of 2D projections of disk configurations.
//!
//! One outer circle for the domain, one solid circle per component, and
//! optionally a dashed circle at the separation enlargement. The viewBox is
//! normalized to the domain radius; identical input yields byte-identical
//! output.

use crate::error::Error;
use crate::scalar::Scalar;
use crate::scene::Scene;
use std::fmt::Write as _;

const PALETTE: [&str; 6] = ["#1f77b4", "#d62728", "#2ca02c", "#9467bd", "#ff7f0e", "#17becf"];

/// Render named configurations of a scene projected to a pair of axes
/// (0-based, both in the same coarse block of the configs' domain).
pub fn render_svg(
    scene: &Scene,
    config_names: &[String],
    axes: (usize, usize),
    enlarge: bool,
) -> Result<Vec<u8>, Error> {
    let params = &scene.params;
    // Resolve the shared domain: from the first config, or the scene's sole
    // domain when no configs are given.
    let domain = match config_names.first() {
        Some(name) => scene.config(name)?.domain().clone(),
        None => {
            let d = scene
                .domains
                .values()
                .next()
                .ok_or_else(|| Error::Invalid("scene has no domains to render".into()))?;
            d.ball.clone()
        }
    };
    for name in config_names {
        let cfg = scene.config(name)?;
        if !cfg.domain().eq_tol(&domain, params.tol) {
            return Err(Error::DomainMismatch(format!(
                "config {:?} does not live on the first config's domain",
                name
            )));
        }
    }
    let structure = domain.structure().clone();
    let (ax, ay) = axes;
    if ax >= structure.dim() || ay >= structure.dim() {
        return Err(Error::IndexRange(format!(
            "projection axes ({}, {}) out of dimension {}",
            ax,
            ay,
            structure.dim()
        )));
    }
    if ax == ay {
        return Err(Error::IndexRange("projection axes must differ".into()));
    }
    let block = structure.coarse_of_axis(ax);
    if structure.coarse_of_axis(ay) != block {
        return Err(Error::IndexRange(
            "projection axes must lie in one coarse block".into(),
        ));
    }
    let radius = domain.radii()[block].to_f64();
    let center = domain.center_vector();
    let cx0 = center[ax].to_f64();
    let cy0 = center[ay].to_f64();
    let sep = params
        .separation_scalar(crate::scalar::NumericMode::Float)
        .to_f64();

    let norm = |v: f64| v / radius;
    let mut svg = String::new();
    let _ = writeln!(svg, r#"<?xml version="1.0" encoding="UTF-8"?>"#);
    let _ = writeln!(
        svg,
        r#"<svg xmlns="http://www.w3.org/2000/svg" version="1.1" viewBox="-1.1 -1.1 2.2 2.2" width="440" height="440">"#
    );
    let _ = writeln!(
        svg,
        r##"  <circle id="domain" cx="0" cy="0" r="1" fill="none" stroke="#000000" stroke-width="0.006"/>"##
    );
    for (ci, name) in config_names.iter().enumerate() {
        let cfg = scene.config(name)?;
        let color = PALETTE[ci % PALETTE.len()];
        for (k, image) in cfg.images().iter().enumerate() {
            let c = image.center_vector();
            let x = norm(c[ax].to_f64() - cx0);
            let y = -norm(c[ay].to_f64() - cy0);
            let r = norm(image.radii()[block].to_f64());
            let _ = writeln!(
                svg,
                r#"  <circle id="{name}-{k}" cx="{x}" cy="{y}" r="{r}" fill="none" stroke="{color}" stroke-width="0.006"/>"#,
            );
            if enlarge {
                let re = r * sep;
                let _ = writeln!(
                    svg,
                    r#"  <circle id="{name}-{k}-enlarged" cx="{x}" cy="{y}" r="{re}" fill="none" stroke="{color}" stroke-width="0.004" stroke-dasharray="0.03,0.02"/>"#,
                );
            }
        }
    }
    let _ = writeln!(svg, "</svg>");
    Ok(svg.into_bytes())
}

/// Deterministic formatting helper shared with the CLI (shortest f64 form).
pub fn fmt_f64(x: f64) -> String {
    format!("{}", x)
}

/// Exact scalars keep their rational text in reports.
pub fn fmt_scalar(s: &Scalar) -> String {
    match s {
        Scalar::Exact(q) => crate::scalar::format_rational(q),
        Scalar::Float(x) => fmt_f64(*x),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::scene::parse_scene;

    fn scene_text() -> String {
        r#"{
            "blockStructure": { "dimension": 2, "coarse": [[1, 2]], "fine": [[1, 2]] },
            "numericMode": "exact",
            "group": {
                "elements": ["e"], "table": [[0]], "identity": 0,
                "matrices": [[["1", "0"], ["0", "1"]]]
            },
            "domains": { "B": { "blocks": [{ "center": ["0", "0"], "radius": "1" }] } },
            "configs": {
                "x": { "domain": "B", "maps": [
                    { "ortho": [["1","0"],["0","1"]], "scales": ["1/50"], "translation": ["-1/2","0"] },
                    { "ortho": [["1","0"],["0","1"]], "scales": ["1/50"], "translation": ["1/2","0"] }
                ]}
            }
        }"#
        .to_string()
    }

    #[test]
    fn renders_domain_only_for_empty_list() {
        let scene = parse_scene(scene_text().as_bytes()).unwrap();
        let svg = render_svg(&scene, &[], (0, 1), false).unwrap();
        let text = String::from_utf8(svg).unwrap();
        assert_eq!(text.matches("<circle").count(), 1);
        assert!(text.contains(r#"id="domain""#));
    }

    #[test]
    fn renders_solid_and_dashed_circles() {
        let scene = parse_scene(scene_text().as_bytes()).unwrap();
        let svg = render_svg(&scene, &["x".into()], (0, 1), true).unwrap();
        let text = String::from_utf8(svg).unwrap();
        assert_eq!(text.matches("<circle").count(), 5);
        assert!(text.contains(r#"id="x-0""#));
        assert!(text.contains(r#"id="x-1-enlarged""#));
        assert!(text.contains("stroke-dasharray"));
        // Dashed radius is 5x the solid radius.
        assert!(text.contains(r#"r="0.02""#));
        assert!(text.contains(r#"r="0.1""#));
    }

    #[test]
    fn rendering_is_deterministic() {
        let scene = parse_scene(scene_text().as_bytes()).unwrap();
        let a = render_svg(&scene, &["x".into()], (0, 1), true).unwrap();
        let b = render_svg(&scene, &["x".into()], (0, 1), true).unwrap();
        assert_eq!(a, b);
    }

    #[test]
    fn axis_errors() {
        let scene = parse_scene(scene_text().as_bytes()).unwrap();
        assert!(render_svg(&scene, &[], (0, 5), false).is_err());
        assert!(render_svg(&scene, &[], (1, 1), false).is_err());
    }
}
