fn main() {
    let rep = loopfield::analysis::verify::renewal_passage_check(20_000, 815).unwrap();
    println!("{}", serde_json::to_string_pretty(&rep.details["bands"]).unwrap());
}
