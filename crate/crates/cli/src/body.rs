//! Parsing of `--body`, `--q` and `--bbox` values.

use surplusect_core::normals::SupportFunction;

pub fn parse_list(s: &str) -> Result<Vec<f64>, String> {
    s.split(',')
        .map(|t| {
            let t = t.trim();
            t.parse::<f64>().map_err(|_| format!("`{t}` is not a number"))
        })
        .collect()
}

/// `ellipse:a,b`, `ellipsoid:r1,...,rn`, `ball:dim,r` or
/// `trig2d:c0,a1,b1,a2,b2,...` where `h = c0 + sum a_k cos k t + b_k sin k t`.
pub fn parse_body(spec: &str) -> Result<SupportFunction, String> {
    let (kind, args) = spec.split_once(':').ok_or_else(|| format!("body `{spec}` lacks a `kind:` prefix"))?;
    let values = parse_list(args)?;
    let built = match kind.trim() {
        "ellipse" => {
            if values.len() != 2 {
                return Err(format!("ellipse takes two radii, got {}", values.len()));
            }
            SupportFunction::ellipsoid(&values)
        }
        "ellipsoid" => SupportFunction::ellipsoid(&values),
        "ball" => {
            if values.len() != 2 || values[0].fract() != 0.0 || values[0] < 1.0 {
                return Err("ball takes `dim,radius`".into());
            }
            SupportFunction::ball(values[0] as usize, values[1])
        }
        "trig2d" => {
            if values.len() % 2 == 0 {
                return Err("trig2d takes c0 followed by (cos, sin) coefficient pairs".into());
            }
            let cos: Vec<f64> = values[1..].iter().step_by(2).copied().collect();
            let sin: Vec<f64> = values[2..].iter().step_by(2).copied().collect();
            SupportFunction::trig2d(values[0], &cos, &sin)
        }
        other => return Err(format!("unknown body kind `{other}`")),
    };
    built.map_err(|e| e.to_string())
}

pub fn parse_bbox(s: &str) -> Result<[f64; 4], String> {
    let v = parse_list(s)?;
    <[f64; 4]>::try_from(v).map_err(|_| "bbox takes x0,y0,x1,y1".to_string())
}

#[cfg(test)]
mod tests {
    use super::*;
    use surplusect_core::normals::BodyKind;

    #[test]
    fn parses_kinds() {
        assert_eq!(parse_body("ellipse:2,1").unwrap().dim(), 2);
        assert_eq!(parse_body("ellipsoid:1,1.5,2").unwrap().dim(), 3);
        assert_eq!(parse_body("ball:3,1").unwrap().dim(), 3);
        let trig = parse_body("trig2d:1,0,0,0.1,0,0,0.05").unwrap();
        match trig.kind() {
            BodyKind::TrigPolynomial2D { c0, cos_coeffs, sin_coeffs } => {
                assert_eq!(*c0, 1.0);
                assert_eq!(cos_coeffs, &vec![0.0, 0.1, 0.0]);
                assert_eq!(sin_coeffs, &vec![0.0, 0.0, 0.05]);
            }
            other => panic!("{other:?}"),
        }
    }

    #[test]
    fn rejects_bad_specs() {
        for bad in ["ellipse:2", "ellipse", "cube:1", "trig2d:1,0.1", "ellipse:2,-1", "trig2d:0.1,0,0,1,0", "ellipse:a,b"] {
            assert!(parse_body(bad).is_err(), "{bad}");
        }
        assert!(parse_bbox("0,0,1").is_err());
        assert_eq!(parse_bbox("-2,-1,2,1").unwrap(), [-2.0, -1.0, 2.0, 1.0]);
    }
}
