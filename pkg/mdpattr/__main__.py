from mdpattr.cli import main

main()
