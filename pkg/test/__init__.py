# polyconc test package
