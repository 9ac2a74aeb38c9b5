from category_discovery.main import main

main()
