//! RD points from CSV: `results.csv` files or any table with `bpp` and
//! `psnr_db` (or `psnr`) columns and an optional `ms_ssim` column.

use taco_core::codec::LOSSLESS;
use taco_core::metrics::{parse_real, RdPoint};
use taco_core::Error;

fn column(headers: &csv::StringRecord, names: &[&str]) -> Option<usize> {
    headers.iter().position(|h| names.contains(&h.trim()))
}

pub fn parse_points(text: &str, codec: Option<&str>, dataset: Option<&str>) -> Result<Vec<RdPoint>, Error> {
    let mut rdr = csv::ReaderBuilder::new().trim(csv::Trim::All).from_reader(text.as_bytes());
    let headers = rdr.headers().map_err(|e| Error::InvalidArgument(e.to_string()))?.clone();
    let bpp = column(&headers, &["bpp"]).ok_or_else(|| Error::InvalidArgument("no bpp column".into()))?;
    let psnr = column(&headers, &["psnr_db", "psnr"])
        .ok_or_else(|| Error::InvalidArgument("no psnr_db column".into()))?;
    let ssim = column(&headers, &["ms_ssim"]);
    let filters: Vec<(usize, &str)> = [("codec", codec), ("dataset", dataset)]
        .into_iter()
        .filter_map(|(name, want)| want.map(|w| column(&headers, &[name]).map(|c| (c, w)).ok_or(name)))
        .collect::<Result<_, _>>()
        .map_err(|name| Error::InvalidArgument(format!("no {name} column to filter on")))?;
    let status = column(&headers, &["status"]);
    let quality = column(&headers, &["quality"]);

    let mut points = Vec::new();
    for rec in rdr.records() {
        let rec = rec.map_err(|e| Error::InvalidArgument(e.to_string()))?;
        if filters.iter().any(|&(c, w)| rec.get(c) != Some(w))
            || status.is_some_and(|c| rec.get(c).is_some_and(|s| s != "ok"))
            || quality.is_some_and(|c| rec.get(c) == Some(LOSSLESS))
        {
            continue;
        }
        let real = |c: usize| {
            rec.get(c)
                .and_then(parse_real)
                .ok_or_else(|| Error::InvalidArgument(format!("bad number in row {:?}", rec.position().map(|p| p.line()))))
        };
        points.push(RdPoint {
            bpp: real(bpp)?,
            psnr: real(psnr)?,
            ms_ssim: ssim.and_then(|c| rec.get(c)).filter(|s| !s.is_empty()).and_then(parse_real),
        });
    }
    Ok(points)
}
