from depcons.cli import main

main()
